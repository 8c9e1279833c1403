//! Group spec files: small JSON documents naming a reflection group.
//!
//! Three shapes are accepted, distinguished by their fields:
//!
//! ```json
//! {"family": "G", "m": 2, "l": 1}
//! {"family": "cyclic", "m": 3, "root": [[1.0, 0.0], [0.0, 0.0]]}
//! {"generators": [[[[-1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]}
//! ```
//!
//! Complex scalars are `[re, im]` pairs; a generator is a row-major 2x2
//! matrix of them. Loading a spec also hashes the raw file bytes so reports
//! can pin down their input (see [`crate::report::Provenance`]).

use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::groups::{self, ExactMat, Mat2, ReflectionGroup, Vec2};
use crate::report::file_hash_hex;
use crate::symbolic::cyclo::CycloNum;

#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum RawSpec {
    Family {
        family: String,
        m: u32,
        l: u32,
    },
    Cyclic {
        family: String,
        m: u32,
        root: [[f64; 2]; 2],
    },
    Generators {
        generators: Vec<[[[f64; 2]; 2]; 2]>,
    },
}

fn complex(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

fn vec2(raw: [[f64; 2]; 2]) -> Vec2 {
    [complex(raw[0]), complex(raw[1])]
}

fn mat2(raw: [[[f64; 2]; 2]; 2]) -> Mat2 {
    [vec2(raw[0]), vec2(raw[1])]
}

/// Recognizes a double as a small-denominator rational, the way hand-written
/// spec entries like `-1.0` or `0.25` are meant.
fn rationalize(x: f64) -> Option<BigRational> {
    for q in 1..=64i64 {
        let p = (x * q as f64).round();
        if p.abs() <= 1e9 && (p / q as f64 - x).abs() <= 1e-12 {
            return Some(BigRational::new(BigInt::from(p as i64), BigInt::from(q)));
        }
    }
    None
}

/// Lifts a generator to exact Gaussian-rational entries in `Q(zeta_4)` when
/// every coordinate is recognizable, so factorization works on such specs.
fn exact_mat2(raw: &[[[f64; 2]; 2]; 2]) -> Option<ExactMat> {
    let i = CycloNum::root_of_unity(4, 1);
    let entry = |pair: [f64; 2]| -> Option<CycloNum> {
        let re = CycloNum::from_rational(4, rationalize(pair[0])?);
        let im = CycloNum::from_rational(4, rationalize(pair[1])?);
        Some(re.add(&im.mul(&i)))
    };
    Some(ExactMat {
        m: [
            [entry(raw[0][0])?, entry(raw[0][1])?],
            [entry(raw[1][0])?, entry(raw[1][1])?],
        ],
    })
}

/// Builds the group described by a spec document.
pub fn parse_group_spec(text: &str) -> Result<ReflectionGroup> {
    let raw: RawSpec = serde_json::from_str(text)
        .map_err(|e| Error::BadSpec(format!("unrecognized spec shape: {e}")))?;
    match raw {
        RawSpec::Family { family, m, l } => {
            if family != "G" {
                return Err(Error::BadSpec(format!(
                    "unknown family {family:?} with fields m, l (expected \"G\")"
                )));
            }
            groups::family_g(m, l)
        }
        RawSpec::Cyclic { family, m, root } => {
            if family != "cyclic" {
                return Err(Error::BadSpec(format!(
                    "unknown family {family:?} with a root field (expected \"cyclic\")"
                )));
            }
            groups::cyclic(m, vec2(root))
        }
        RawSpec::Generators { generators } => {
            if let Some(exact) = generators.iter().map(exact_mat2).collect::<Option<Vec<_>>>() {
                return groups::close_generators_exact(exact);
            }
            let mats: Vec<Mat2> = generators.into_iter().map(mat2).collect();
            groups::close_generators(&mats)
        }
    }
}

/// Reads a spec file and returns the group together with the file hash.
pub fn load_group_spec(path: impl AsRef<Path>) -> Result<(ReflectionGroup, String)> {
    let bytes = std::fs::read(path.as_ref())?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::BadSpec(format!("spec file is not UTF-8: {e}")))?;
    let group = parse_group_spec(text)?;
    Ok((group, file_hash_hex(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_form() {
        let g = parse_group_spec(r#"{"family": "G", "m": 2, "l": 1}"#).unwrap();
        assert_eq!(g.order(), 8);
        assert_eq!(g.name, "G(2,1,2)");
    }

    #[test]
    fn cyclic_form() {
        let g = parse_group_spec(
            r#"{"family": "cyclic", "m": 3, "root": [[1.0, 0.0], [0.0, 0.0]]}"#,
        )
        .unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.reflections.len(), 2);
    }

    #[test]
    fn generators_form() {
        let text = r#"{"generators": [
            [[[-1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
        ]}"#;
        let g = parse_group_spec(text).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(g.reflections.len(), 2);
        // +-1 entries lift to exact arithmetic, so factorization works
        assert!(g.is_exact());
    }

    #[test]
    fn irrational_generators_fall_back_to_numeric() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(
            r#"{{"generators": [[[[{c}, 0.0], [{c}, 0.0]], [[{c}, 0.0], [-{c}, 0.0]]]]}}"#
        );
        let g = parse_group_spec(&text).unwrap();
        assert_eq!(g.order(), 2);
        assert!(!g.is_exact());
    }

    #[test]
    fn rejects_unknown_family_and_garbage() {
        assert!(matches!(
            parse_group_spec(r#"{"family": "H", "m": 2, "l": 1}"#),
            Err(Error::BadSpec(_))
        ));
        assert!(matches!(
            parse_group_spec(r#"{"order": 8}"#),
            Err(Error::BadSpec(_))
        ));
        assert!(matches!(parse_group_spec("not json"), Err(Error::BadSpec(_))));
    }

    #[test]
    fn load_hashes_bytes() {
        let dir = std::env::temp_dir().join("ballquot-spec-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.json");
        let text = r#"{"family": "G", "m": 2, "l": 2}"#;
        std::fs::write(&path, text).unwrap();
        let (g, hash) = load_group_spec(&path).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(hash, file_hash_hex(text.as_bytes()));
    }
}
