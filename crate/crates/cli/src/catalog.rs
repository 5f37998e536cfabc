//! The `folflow list` catalog.

use std::fmt::Write as _;

use crate::config::Scenario;

pub struct ScenarioInfo {
    pub scenario: Scenario,
    pub summary: &'static str,
    pub equations: &'static str,
    pub required: &'static str,
    pub optional: &'static str,
}

pub fn catalog() -> [ScenarioInfo; 5] {
    [
        ScenarioInfo {
            scenario: Scenario::Surface,
            summary: "surface of revolution; the profile heats until the patch is a flat cone (or cylinder)",
            equations: "ρ_t = ρ_xx,  k = -(log ρ)_x,  K = -ρ_xx/ρ,  k_t = k_xx - (k²)_x",
            required: "grid, initial_data (ρ₀ > 0, |ρ₀'| ≤ 1)",
            optional: "time, boundary (dirichlet ends = ρ₀ ends), output",
        },
        ScenarioInfo {
            scenario: Scenario::Twisted,
            summary: "twisted product; each base slice of the warping function heats along the fiber circle",
            equations: "∂t f = n Δ_F f,  H = -n ∇ log f,  ∂t H + ∇|H|² = n ∇ Div H",
            required: "grid (circle), initial_data (fiber profile > 0), twisted.base_points",
            optional: "n_rank, twisted.base_profile, twisted.base_length, time, output",
        },
        ScenarioInfo {
            scenario: Scenario::Normalized,
            summary: "normalized flow on a compact fiber; Sc_mix - ‖T‖² relaxes to n λ₀ of -Δ - β_D",
            equations: "∂t u = n(Δu + β_D u),  H = -n ∇ log u,  ∂t‖T‖² = 4(Sc_mix - ‖T‖² - n λ₀)‖T‖²",
            required: "grid (circle), potential (β_D ≥ 0)",
            optional: "n_rank, initial_data (u₀, default 1), T2_initial (default 0), tolerances, seed, time, output",
        },
        ScenarioInfo {
            scenario: Scenario::ColeHopfCheck,
            summary: "forced Burgers evolved directly next to the Cole-Hopf image of the heat/reaction flow",
            equations: "∂t H = n H_xx - (H²)_x - n² β_x  ⇔  ∂t u = n(u_xx + β u),  H = -n (log u)_x",
            required: "grid (circle), initial_data (u₀ > 0)",
            optional: "potential (β, default 0), n_rank, scheme, time, output",
        },
        ScenarioInfo {
            scenario: Scenario::SpectralReport,
            summary: "lowest eigenpairs of the Schrödinger operator, Weyl counts, eigen-expansion of a profile",
            equations: "(-Δ - f) e_k = λ_k e_k,  λ₀ ≥ -max f,  #{λ_k ≤ λ} ≈ (L/π) √λ",
            required: "grid, potential (f)",
            optional: "spectral.modes (default 8), initial_data (profile to expand), seed, output",
        },
    ]
}

pub fn render() -> String {
    let mut s = String::from("folflow scenarios\n");
    for info in catalog() {
        let _ = write!(
            s,
            "\n{}\n  {}\n  equations: {}\n  required:  {}\n  optional:  {}\n",
            info.scenario, info.summary, info.equations, info.required, info.optional
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_is_listed_once() {
        let text = render();
        for s in Scenario::ALL {
            assert_eq!(text.matches(&format!("\n{s}\n")).count(), 1, "{s}");
        }
        assert_eq!(text.matches("equations:").count(), 5);
    }
}
