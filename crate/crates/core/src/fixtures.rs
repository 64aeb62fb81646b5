//! Built-in systems: the three-agent example and the four-agent experiment
//! (cooperative and antagonistic appraisal networks, with issue coupling).

use std::collections::BTreeMap;

use crate::netcore::{
    stochastic_to_laplacian, AppraisalMatrix, ConversionParams, InteractingLaplacian, MidsMatrix,
    StochasticMatrix, SusceptibilityMatrix, SystemSpec,
};

/// Initial opinions of the four-agent experiment, agent-major (two issues each).
pub const SEC5_X0: [f64; 8] = [25.0, 25.0, 25.0, 15.0, 75.0, -50.0, 85.0, 5.0];

/// Initial opinions of the three-agent example.
pub const EXAMPLE1_X0: [f64; 3] = [25.0, 75.0, 85.0];

pub fn example1_laplacian() -> InteractingLaplacian {
    InteractingLaplacian::from_rows(&[
        &[2.0, -1.0, -1.0],
        &[-1.0, 2.0, -1.0],
        &[-1.0, -1.0, 2.0],
    ])
    .expect("example Laplacian is valid")
}

pub fn example1_appraisal() -> AppraisalMatrix {
    AppraisalMatrix::from_rows(&[&[0.5, -0.5, 0.0], &[0.0, 0.5, -0.5], &[-0.5, 0.0, 0.5]])
        .expect("example appraisal is valid")
}

/// Three-agent example with susceptibilities `(-0.05, 0.5, 0.5)`.
pub fn example1() -> SystemSpec {
    SystemSpec::new(
        SusceptibilityMatrix::from_slice(&[-0.05, 0.5, 0.5]).expect("valid"),
        example1_laplacian(),
        example1_appraisal(),
    )
    .expect("consistent dimensions")
}

/// Three-agent example with uniform susceptibility 0.5.
pub fn example1_half() -> SystemSpec {
    example1()
        .with_lambda(SusceptibilityMatrix::uniform(3, 0.5).expect("valid"))
        .expect("consistent dimensions")
}

/// Influence matrix measured in the four-agent experiment.
pub fn sec5_p() -> StochasticMatrix {
    StochasticMatrix::from_rows(&[
        &[0.22, 0.12, 0.36, 0.3],
        &[0.147, 0.215, 0.344, 0.294],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.09, 0.178, 0.446, 0.286],
    ])
    .expect("experiment matrix is stochastic")
}

/// Laplacian of the experiment network (step size 1).
pub fn sec5_laplacian() -> InteractingLaplacian {
    stochastic_to_laplacian(&sec5_p(), ConversionParams::new(1.0).expect("positive"))
        .expect("stochastic input")
}

pub fn sec5_d1() -> AppraisalMatrix {
    AppraisalMatrix::from_rows(&[
        &[0.2, 0.2, 0.3, 0.3],
        &[0.1, 0.5, 0.0, 0.4],
        &[0.1, 0.4, 0.0, 0.5],
        &[0.4, 0.3, 0.2, 0.1],
    ])
    .expect("cooperative appraisal is valid")
}

pub fn sec5_d2() -> AppraisalMatrix {
    AppraisalMatrix::from_rows(&[
        &[0.2, -0.2, -0.3, -0.3],
        &[0.1, 0.5, 0.0, 0.4],
        &[-0.1, 0.4, 0.0, 0.5],
        &[0.4, 0.3, -0.2, 0.1],
    ])
    .expect("antagonistic appraisal is valid")
}

pub fn sec5_lambda1() -> SusceptibilityMatrix {
    SusceptibilityMatrix::from_slice(&[-1.0, 1.0, 1.0, -1.0]).expect("valid")
}

pub fn sec5_lambda2() -> SusceptibilityMatrix {
    SusceptibilityMatrix::from_slice(&[-1.5, 2.0, 1.0, -0.5]).expect("valid")
}

pub fn c1() -> MidsMatrix {
    MidsMatrix::from_rows(&[&[0.9, 0.1], &[0.1, 0.9]]).expect("valid")
}

pub fn c2() -> MidsMatrix {
    MidsMatrix::from_rows(&[&[0.6, 0.4], &[0.3, 0.7]]).expect("valid")
}

pub fn c1_star() -> MidsMatrix {
    c1().scaled(0.85)
}

pub fn c2_star() -> MidsMatrix {
    c2().scaled(0.95)
}

/// Cooperative experiment system without issue coupling.
pub fn sec5_coop_issue_free() -> SystemSpec {
    SystemSpec::new(sec5_lambda1(), sec5_laplacian(), sec5_d1()).expect("consistent")
}

/// Antagonistic experiment system without issue coupling.
pub fn sec5_antag_issue_free() -> SystemSpec {
    SystemSpec::new(sec5_lambda2(), sec5_laplacian(), sec5_d2()).expect("consistent")
}

pub fn sec5_coop() -> SystemSpec {
    sec5_coop_issue_free().with_mids(c1())
}

pub fn sec5_coop_stable() -> SystemSpec {
    sec5_coop_issue_free().with_mids(c1_star())
}

pub fn sec5_antag() -> SystemSpec {
    sec5_antag_issue_free().with_mids(c2())
}

pub fn sec5_antag_stable() -> SystemSpec {
    sec5_antag_issue_free().with_mids(c2_star())
}

/// Named systems available to the CLI.
pub struct FixtureCatalog {
    systems: BTreeMap<&'static str, (SystemSpec, &'static str)>,
}

impl Default for FixtureCatalog {
    fn default() -> Self {
        Self::new()
    }
}

impl FixtureCatalog {
    pub fn new() -> Self {
        let entries: [(&'static str, SystemSpec, &'static str); 8] = [
            ("example1", example1(), "3 agents, antagonistic D, Λ = diag(-0.05, 0.5, 0.5)"),
            ("example1-half", example1_half(), "3 agents, antagonistic D, Λ = 0.5 I"),
            ("sec5-coop", sec5_coop(), "4 agents, cooperative D1, Λ1, C1"),
            ("sec5-coop-stable", sec5_coop_stable(), "4 agents, cooperative D1, Λ1, 0.85 C1"),
            ("sec5-coop-issue-free", sec5_coop_issue_free(), "4 agents, cooperative D1, Λ1"),
            ("sec5-antag", sec5_antag(), "4 agents, antagonistic D2, Λ2, C2"),
            ("sec5-antag-stable", sec5_antag_stable(), "4 agents, antagonistic D2, Λ2, 0.95 C2"),
            ("sec5-antag-issue-free", sec5_antag_issue_free(), "4 agents, antagonistic D2, Λ2"),
        ];
        Self {
            systems: entries
                .into_iter()
                .map(|(name, sys, desc)| (name, (sys, desc)))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&SystemSpec> {
        self.systems.get(name).map(|(s, _)| s)
    }

    /// `(name, description, system)` triples in name order.
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &'static str, &SystemSpec)> {
        self.systems.iter().map(|(k, (s, d))| (*k, *d, s))
    }

    /// Initial opinions associated with a fixture.
    pub fn initial_opinions(&self, name: &str) -> Option<Vec<f64>> {
        let sys = self.get(name)?;
        Some(if sys.agents() == 3 {
            EXAMPLE1_X0.to_vec()
        } else if sys.mids.is_some() {
            SEC5_X0.to_vec()
        } else {
            SEC5_X0.iter().step_by(2).copied().collect()
        })
    }
}
