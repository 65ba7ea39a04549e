//! Output records: CSV rows and their JSON mirrors.

use std::io::Write;

use nikolskii_core::sweep::SweepRow;
use nikolskii_core::{BasisKind, Law, MCEstimate, NormSpec, Statistic};
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 15] = [
    "seed", "law", "sigma", "d", "n", "N", "p", "q", "statistic", "samples", "rejected", "mean", "stderr", "ci_lo",
    "ci_hi",
];

/// Formats `x` with 17 significant digits, positional when that stays short.
pub fn sig17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.0000000000000000".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..16).contains(&exp) {
        let decimals = (16 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn exponent(spec: Option<NormSpec>) -> String {
    spec.map(|s| s.to_string()).unwrap_or_default()
}

/// One estimate with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    pub seed: u64,
    pub law: Law,
    pub sigma: f64,
    pub basis: BasisKind,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub statistic: Statistic,
    pub estimate: MCEstimate,
}

impl EstimateRecord {
    pub fn from_row(row: &SweepRow, statistic: Statistic, law: Law, sigma: f64, basis: BasisKind) -> Self {
        EstimateRecord {
            seed: row.estimate.seed,
            law,
            sigma,
            basis,
            d: row.d,
            n: row.n,
            big_n: row.big_n,
            statistic,
            estimate: row.estimate,
        }
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let (p, q) = self.statistic.exponents();
        let e = &self.estimate;
        vec![
            self.seed.to_string(),
            self.law.as_str().to_string(),
            sig17(self.sigma),
            self.d.to_string(),
            self.n.to_string(),
            self.big_n.to_string(),
            exponent(p),
            exponent(q),
            self.statistic.label(),
            e.samples.to_string(),
            e.rejected.to_string(),
            sig17(e.mean),
            sig17(e.stderr),
            sig17(e.ci95.0),
            sig17(e.ci95.1),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, records: &[EstimateRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(sig17(1.0), "1.0000000000000000");
        assert_eq!(sig17(75.0), "75.000000000000000");
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(-2.5e-7), "-2.4999999999999999e-7");
        assert_eq!(sig17(f64::INFINITY), "inf");
        for x in [std::f64::consts::PI, 1e300, 3.3e-200, 123456.789, 1e16] {
            assert_eq!(sig17(x).parse::<f64>().unwrap(), x);
        }
    }
}
