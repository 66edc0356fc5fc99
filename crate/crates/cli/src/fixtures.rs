//! Bundled experiment configs.

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const CATALOG: &[Fixture] = &[
    Fixture {
        name: "bernoulli2",
        description: "(0.3, 0.7) Bernoulli measure on the full 2-shift; word measures up to length 6",
        text: include_str!("../fixtures/bernoulli2.json"),
    },
    Fixture {
        name: "golden-mean-parry",
        description: "0-centred 3-nested targets with mu(C_n) <= 1/n under the golden-mean Parry measure",
        text: include_str!("../fixtures/golden-mean-parry.json"),
    },
    Fixture {
        name: "cat-map",
        description: "shrinking squares min(0.001, 6/n) at a fixed centre on the cat map, E_N = 50",
        text: include_str!("../fixtures/cat-map.json"),
    },
    Fixture {
        name: "baker",
        description: "random balls and their inscribed dyadic squares under the baker map",
        text: include_str!("../fixtures/baker.json"),
    },
    Fixture {
        name: "thm22",
        description: "the repeated cylinder [0] with block lengths l_k = k, K = 60",
        text: include_str!("../fixtures/thm22.json"),
    },
    Fixture {
        name: "thm23",
        description: "summable base with divergent derived sums, eps = 0.5, N about 10^6",
        text: include_str!("../fixtures/thm23.json"),
    },
    Fixture {
        name: "prop16",
        description: "base words 0^k with unit-mass blocks, K = 28",
        text: include_str!("../fixtures/prop16.json"),
    },
];

pub fn find(name: &str) -> Result<&'static Fixture> {
    CATALOG.iter().find(|f| f.name == name).ok_or_else(|| {
        let names: Vec<&str> = CATALOG.iter().map(|f| f.name).collect();
        CliError::validation("fixtures.find", format!("unknown fixture {name:?}; known: {}", names.join(", ")))
    })
}

pub fn load(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(find(name)?.text)
}
