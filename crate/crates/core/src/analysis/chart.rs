use serde::{Deserialize, Serialize};

use super::SweepResult;

pub const CSV_HEADER: &str = "epsilon,mae,expected_mae";

/// MAE-vs-ε series for plotting. Correlation fields are omitted when the
/// sweep could not define them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDocument {
    pub grid: Vec<f64>,
    pub mae: Vec<f64>,
    pub expected_mae: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pearson: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spearman: Option<f64>,
    pub units: String,
}

pub fn chart_data(sweep: &SweepResult) -> ChartDocument {
    ChartDocument {
        grid: sweep.grid.clone(),
        mae: sweep.mae_curve.clone(),
        expected_mae: sweep.expected_mae.clone(),
        pearson: sweep.pearson_r,
        spearman: sweep.spearman_rho,
        units: sweep.units.clone(),
    }
}

impl ChartDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chart document serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for ((e, m), x) in self.grid.iter().zip(&self.mae).zip(&self.expected_mae) {
            out.push_str(&format!("{e},{m},{x}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(pearson: Option<f64>) -> SweepResult {
        SweepResult {
            grid: vec![0.1, 0.5, 1.0, 1.5, 2.0],
            mae_curve: vec![100.3, 19.93, 10.01, 6.671_234_567_89, 4.999],
            expected_mae: vec![100.0, 20.0, 10.0, 10.0 / 1.5, 5.0],
            mae_std: vec![0.0; 5],
            pearson_r: pearson,
            spearman_rho: pearson.map(|_| -1.0),
            seeds_per_point: 20,
            delta_f: 10.0,
            base_seed: 0,
            units: "W".into(),
        }
    }

    #[test]
    fn five_point_document() {
        let doc = chart_data(&sweep(Some(-0.77)));
        let v: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        for key in ["grid", "mae", "expected_mae", "pearson", "spearman", "units"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["mae"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn undefined_correlations_are_omitted() {
        let v: serde_json::Value =
            serde_json::from_str(&chart_data(&sweep(None)).to_json()).unwrap();
        assert!(v.get("pearson").is_none() && v.get("spearman").is_none());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = sweep(Some(-0.768_261_650_885_763_7));
        let doc = chart_data(&s);
        let back: ChartDocument = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.mae, s.mae_curve);
    }

    #[test]
    fn csv_layout() {
        let csv = chart_data(&sweep(None)).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0.1,100.3,100"));
        assert_eq!(csv.lines().count(), 6);
    }
}
