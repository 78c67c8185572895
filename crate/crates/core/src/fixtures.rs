//! Named sample maps and diagrams accepted by the command layer.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ratmap::RatMap;
use crate::relations::SymbolicSpec;

/// z^2 - 2, the degree-2 Chebyshev-type map with critical orbit 0, -2, 2, 2.
pub fn chebyshev2() -> RatMap {
    RatMap::polynomial(Poly::from_reals(&[-2.0, 0.0, 1.0])).unwrap()
}

/// z^2 + i, whose critical orbit is strictly preperiodic on a repelling
/// two-cycle.
pub fn misiurewicz_i() -> RatMap {
    RatMap::polynomial(Poly::new(vec![
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]))
    .unwrap()
}

/// z^3 - 3z, a cubic whose two critical points land on repelling fixed
/// points in one step.
pub fn cubic_pm() -> RatMap {
    RatMap::polynomial(Poly::from_reals(&[0.0, -3.0, 0.0, 1.0])).unwrap()
}

/// A nine-ray orbit diagram with three free rays: the sample model shipped
/// under the name "fig1".
pub fn fig1_spec() -> SymbolicSpec {
    SymbolicSpec {
        nu: 9,
        generators: vec![[1, 2, 2, 1], [1, 3, 1, 4], [7, 8, 1, 4], [8, 9, 1, 1]],
        landings: vec![[4, 3, 6], [5, 4, 6]],
    }
}

/// Parses a complex literal: "2", "-1.5", "i", "2i", "1+2i", "-1-0.5i".
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim().replace(' ', "");
    if t.is_empty() {
        return Err(Error::InvalidInput("empty complex literal".into()));
    }
    // try pure real
    if let Ok(re) = t.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    // pure imaginary
    if let Some(im_part) = t.strip_suffix('i') {
        if !im_part.contains(['+', '-']) || im_part.len() <= 1 {
            let im = match im_part {
                "" | "+" => 1.0,
                "-" => -1.0,
                other => other
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad complex literal {s}")))?,
            };
            return Ok(Complex64::new(0.0, im));
        }
        // re +- im i: split at the last sign that is not an exponent sign
        let bytes = im_part.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && bytes[k - 1] as char != 'e' && bytes[k - 1] as char != 'E'
            {
                split = Some(k);
                break;
            }
        }
        if let Some(k) = split {
            let re: f64 = im_part[..k]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad complex literal {s}")))?;
            let sign = if &im_part[k..k + 1] == "-" { -1.0 } else { 1.0 };
            let mag = &im_part[k + 1..];
            let im: f64 = if mag.is_empty() {
                1.0
            } else {
                mag.parse()
                    .map_err(|_| Error::InvalidInput(format!("bad complex literal {s}")))?
            };
            return Ok(Complex64::new(re, sign * im));
        }
    }
    Err(Error::InvalidInput(format!("bad complex literal {s}")))
}
