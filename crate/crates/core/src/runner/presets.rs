//! Bundled configs, runnable as `preset:<name>`.

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

static PRESETS: &[Preset] = &[
    Preset {
        name: "paper-schedule",
        description: "valleys on SK N=18 with the asymptotic (beta, t, r, delta, epsilon) schedule; pass rate reported",
        json: include_str!("../../presets/paper-schedule.json"),
    },
    Preset {
        name: "c8-ea",
        description: "Edwards-Anderson on the 8-cycle at beta=1: Var F against the 9/64 lower bound",
        json: include_str!("../../presets/c8-ea.json"),
    },
    Preset {
        name: "rem-curve",
        description: "REM N=12 at beta=3: coincidence curve E<1{s1=s2}>_{0,t} down to 2^-12",
        json: include_str!("../../presets/rem-curve.json"),
    },
    Preset {
        name: "sk-superconcentration",
        description: "SK at beta=1: Var F log N / N over N in {8, 12, 16, 20}, reported only",
        json: include_str!("../../presets/sk-superconcentration.json"),
    },
    Preset {
        name: "single-edge",
        description: "single-edge Edwards-Anderson: Var F against the chaos integral, both by quadrature",
        json: include_str!("../../presets/single-edge.json"),
    },
];

pub fn presets() -> &'static [Preset] {
    PRESETS
}

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::ConfigSource;

    #[test]
    fn every_preset_parses_and_validates() {
        for p in presets() {
            let src = ConfigSource::load(&format!("preset:{}", p.name)).unwrap();
            let cfg = src.parse().unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.name.as_deref(), Some(p.name));
        }
        assert!(preset("c8-ea").is_some());
        assert!(preset("nope").is_none());
    }
}
