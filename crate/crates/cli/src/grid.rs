//! Comma-separated ε lists such as `0.3,0.2,0.1,0.05`.

use crate::error::{usage, CliResult};

pub const MAX_GRID_LEN: usize = 1024;

pub fn parse_eps_grid(text: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (i, part) in text.split(',').enumerate() {
        let part = part.trim();
        if part.is_empty() {
            return usage(format!("empty entry at position {} in eps list", i + 1));
        }
        let v: f64 = match part.parse() {
            Ok(v) => v,
            Err(_) => return usage(format!("cannot parse eps entry {part:?}")),
        };
        if !(v.is_finite() && v > 0.0) {
            return usage(format!("eps entries must be positive and finite, got {part}"));
        }
        out.push(v);
        if out.len() > MAX_GRID_LEN {
            return usage(format!("eps list longer than {MAX_GRID_LEN} entries"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(parse_eps_grid("0.3,0.2,0.1,0.05").unwrap(), vec![0.3, 0.2, 0.1, 0.05]);
        assert_eq!(parse_eps_grid(" 0.2 , 1e-1").unwrap(), vec![0.2, 0.1]);
        for bad in ["", "0.3,", ",0.1", "0.1,,0.2", "abc", "-0.1", "0", "inf", "NaN"] {
            assert!(parse_eps_grid(bad).is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn roundtrips(xs in proptest::collection::vec(1e-6f64..10.0, 1..20)) {
            let text = xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            prop_assert_eq!(parse_eps_grid(&text).unwrap(), xs);
        }

        #[test]
        fn never_panics(s in "\\PC*") {
            let _ = parse_eps_grid(&s);
        }
    }
}
