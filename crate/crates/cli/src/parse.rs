//! Parsers for the compact list and range flags.

/// Concatenation levels as `1,2,3` or an inclusive range `1..5`.
pub fn levels(s: &str) -> Result<Vec<u32>, String> {
    let s = s.trim();
    let out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start {a:?}"))?;
        let b: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad range end {b:?}"))?;
        if b < a {
            return Err(format!("empty range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| format!("bad level {x:?}")))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err("levels start at 1".into());
    }
    let mut sorted = out.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != out.len() {
        return Err("repeated level".into());
    }
    Ok(sorted)
}

/// Inclusive `A:B:STEP` grid. Points are `A + i*STEP`, rounded to 12
/// decimals so that e.g. `0.9:1.3:0.05` yields exactly `1.3` at the end.
pub fn sigma_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(format!("expected A:B:STEP, got {s:?}"));
    };
    let num = |x: &str| -> Result<f64, String> {
        let v: f64 = x.trim().parse().map_err(|_| format!("bad number {x:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("bad number {x:?}"))
        }
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if a < 0.0 {
        return Err("noise must be non-negative".into());
    }
    if b < a {
        return Err(format!("end {b} below start {a}"));
    }
    if step <= 0.0 {
        return Err("step must be positive".into());
    }
    let count = ((b - a) / step + 1e-9).floor() as u64;
    if count > 100_000 {
        return Err("grid too large".into());
    }
    Ok((0..=count)
        .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_lists() {
        assert_eq!(levels("1,2,3").unwrap(), [1, 2, 3]);
        assert_eq!(levels("3, 1").unwrap(), [1, 3]);
        assert_eq!(levels("1..5").unwrap(), [1, 2, 3, 4, 5]);
        assert_eq!(levels("2..=3").unwrap(), [2, 3]);
        assert_eq!(levels("4").unwrap(), [4]);
        for bad in ["0,1", "", "a", "3..1", "1,1"] {
            assert!(levels(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grids() {
        let g = sigma_grid("0.9:1.3:0.05").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 0.9);
        assert_eq!(g[8], 1.3);
        assert_eq!(g[2], 1.0);
        assert_eq!(sigma_grid("0.555:0.555:1").unwrap(), [0.555]);
        assert_eq!(sigma_grid("1:1.1:0.04").unwrap(), [1.0, 1.04, 1.08]);
        for bad in [
            "1:2",
            "1:0.5:0.1",
            "0:1:0",
            "0:1:-1",
            "-1:1:1",
            "a:b:c",
            "0:1:0.000001",
        ] {
            assert!(sigma_grid(bad).is_err(), "{bad}");
        }
    }
}
