//! Provenance stamps and tabular serialization for verification reports.
//!
//! Every report that leaves the library carries the crate version, the RNG
//! seed, and (when the group came from a spec file) a hash of the file's
//! bytes, so a saved report pins down exactly what produced it.

use serde::Serialize;

use crate::sampling::fnv1a64;
use crate::verify::BoundReport;

/// Identifies the code, inputs, and randomness behind a report.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    /// Crate version the report was produced with.
    pub version: String,
    /// FNV-1a hash of the group spec file, when the group was loaded from one.
    pub spec_hash: Option<String>,
    /// Base seed for every randomized routine in the run.
    pub seed: u64,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec_hash: None,
            seed,
        }
    }

    pub fn with_spec_hash(mut self, hash: impl Into<String>) -> Self {
        self.spec_hash = Some(hash.into());
        self
    }
}

/// Hex digest of a byte string, as stored in [`Provenance::spec_hash`].
pub fn file_hash_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

fn float_cell(x: f64) -> String {
    // `{:?}` prints the shortest string that round-trips, so equal inputs
    // always produce byte-identical cells.
    format!("{x:?}")
}

fn point_cell(point: &Option<[f64; 4]>) -> String {
    match point {
        Some(coords) => coords
            .iter()
            .map(|c| float_cell(*c))
            .collect::<Vec<_>>()
            .join(";"),
        None => String::new(),
    }
}

/// Renders the per-stratum table of a bound report as CSV.
///
/// Witness points are four semicolon-separated reals (re/im of each
/// coordinate); empty strata leave the witness cells blank. The final row
/// aggregates the whole scan under the stratum name `all`.
pub fn bound_report_csv(report: &BoundReport) -> String {
    let mut out = String::from("stratum,count,sup_ratio,argmax_z,argmax_w\n");
    for row in &report.per_stratum {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.stratum,
            row.count,
            float_cell(row.sup_ratio),
            point_cell(&row.argmax_z),
            point_cell(&row.argmax_w),
        ));
    }
    out.push_str(&format!(
        "all,{},{},{},{}\n",
        report.samples,
        float_cell(report.sup_ratio),
        point_cell(&report.argmax_z),
        point_cell(&report.argmax_w),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::StratumRow;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = file_hash_hex(b"hello");
        assert_eq!(a.len(), 16);
        assert_eq!(a, file_hash_hex(b"hello"));
        assert_ne!(a, file_hash_hex(b"hellp"));
    }

    #[test]
    fn csv_layout() {
        let report = BoundReport {
            group: "trivial".to_string(),
            p: 2.0,
            samples: 3,
            sup_ratio: 1.0,
            argmax_z: Some([0.5, 0.0, -0.25, 0.125]),
            argmax_w: Some([0.0, 0.0, 0.0, 0.0]),
            argmax_reproduced: true,
            per_stratum: vec![StratumRow {
                stratum: "uniform".to_string(),
                count: 3,
                sup_ratio: 1.0,
                argmax_z: None,
                argmax_w: None,
            }],
            failures: 0,
        };
        let csv = bound_report_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("stratum,count,sup_ratio,argmax_z,argmax_w")
        );
        assert_eq!(lines.next(), Some("uniform,3,1.0,,"));
        assert_eq!(lines.next(), Some("all,3,1.0,0.5;0.0;-0.25;0.125,0.0;0.0;0.0;0.0"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn provenance_carries_version() {
        let p = Provenance::new(7).with_spec_hash("abc");
        assert_eq!(p.version, env!("CARGO_PKG_VERSION"));
        assert_eq!(p.seed, 7);
        assert_eq!(p.spec_hash.as_deref(), Some("abc"));
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"seed\":7"));
    }
}
