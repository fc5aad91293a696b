//! Coefficient presets and the experiments compiled into the binary.

use std::fmt::Write as _;

pub struct Bundled {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "model_manufactured",
        description: "linear solution x + t of the model operator (v = 1): exactness, residual, Harnack, oscillation",
        text: include_str!("../experiments/model_manufactured.exp"),
    },
    Bundled {
        name: "abp_scaling",
        description: "zero data with g = -1 on the unit box: ABP constant over the whole box",
        text: include_str!("../experiments/abp_scaling.exp"),
    },
    Bundled {
        name: "max_principle_random",
        description: "random admissible coefficients with nonpositive data and forcing: sup u+ stays at 0",
        text: include_str!("../experiments/max_principle_random.exp"),
    },
    Bundled {
        name: "harnack_ensemble",
        description: "20 seeded nonnegative solutions (v = 1): Harnack quotients at three radii, oscillation decay",
        text: include_str!("../experiments/harnack_ensemble.exp"),
    },
];

pub const COEFFICIENT_PRESETS: &[(&str, &str)] = &[
    ("identity", "a = I, b = (1, 0, ...)"),
    ("model:v=1", "model operator a = I, b = (v, 0, ...); any v > 0, e.g. model:v=0.25"),
    ("random:seed=<u64>", "smooth random coefficients meeting the structure conditions for lambda <= 0.5"),
    ("expressions", "a11 ... ann and b1 ... bn given as expressions in x, y2, ..., t"),
];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

/// Names and one-line descriptions of every preset.
pub fn list_presets() -> String {
    let mut out = String::new();
    let _ = writeln!(out, "coefficient presets:");
    for (name, desc) in COEFFICIENT_PRESETS {
        let _ = writeln!(out, "  {name:<20} {desc}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "bundled experiments:");
    for b in BUNDLED {
        let _ = writeln!(out, "  {:<20} {}", b.name, b.description);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ExperimentSpec;

    #[test]
    fn listing_names_the_presets() {
        let text = list_presets();
        assert!(text.contains("model:v=1"));
        assert!(text.contains("random:seed="));
        assert!(BUNDLED.iter().all(|b| text.contains(b.name)));
    }

    #[test]
    fn bundled_experiments_parse() {
        for b in BUNDLED {
            let spec = ExperimentSpec::parse(b.text).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(spec.name, b.name);
        }
    }
}
