//! Row-by-row comparison of an analytic table against a Monte Carlo table.

use srmt_core::table::Cell;
use srmt_core::Table;

use crate::error::{CliError, CliResult};

/// Which columns to join and the thresholds a row must meet. Unset
/// thresholds are not checked.
#[derive(Clone, Debug, PartialEq)]
pub struct ToleranceSpec {
    pub key: String,
    pub analytic_column: String,
    pub mc_column: String,
    pub stderr_column: Option<String>,
    pub max_rel: Option<f64>,
    pub max_abs: Option<f64>,
    pub max_z: Option<f64>,
    /// Only rows with `|key|` in this closed range are compared.
    pub key_range: Option<[f64; 2]>,
}

impl ToleranceSpec {
    pub fn new(key: &str, analytic_column: &str, mc_column: &str) -> Self {
        Self {
            key: key.into(),
            analytic_column: analytic_column.into(),
            mc_column: mc_column.into(),
            stderr_column: None,
            max_rel: None,
            max_abs: None,
            max_z: None,
            key_range: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub key: f64,
    pub analytic: f64,
    pub mc: f64,
    pub stderr: Option<f64>,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub z: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub key: String,
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            self.key.as_str(),
            "analytic",
            "mc",
            "stderr",
            "abs_dev",
            "rel_dev",
            "z",
            "pass",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.key.into(),
                r.analytic.into(),
                r.mc.into(),
                r.stderr.unwrap_or(f64::NAN).into(),
                r.abs_dev.into(),
                r.rel_dev.into(),
                r.z.unwrap_or(f64::NAN).into(),
                Cell::from(if r.pass { "true" } else { "false" }),
            ]);
        }
        t
    }

    pub fn worst_z(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.z.map(f64::abs)).reduce(f64::max)
    }

    pub fn worst_rel(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_dev).fold(0.0, f64::max)
    }

    pub fn worst_abs(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max)
    }
}

fn keyed(table: &Table, spec: &ToleranceSpec, columns: &[&str]) -> CliResult<Vec<(f64, Vec<f64>)>> {
    let keys = table.column_f64(&spec.key)?;
    let cols = columns
        .iter()
        .map(|c| table.column_f64(c))
        .collect::<srmt_core::Result<Vec<_>>>()?;
    Ok(keys
        .into_iter()
        .enumerate()
        .filter(|(_, k)| spec.key_range.map_or(true, |[a, b]| (a..=b).contains(&k.abs())))
        .map(|(i, k)| (k, cols.iter().map(|c| c[i]).collect()))
        .collect())
}

fn same_key(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Joins `analytic` and `mc` on `spec.key` and checks every row. Both tables
/// must carry the same key set (after the optional `key_range` filter).
pub fn compare_report(analytic: &Table, mc: &Table, spec: &ToleranceSpec) -> CliResult<ComparisonReport> {
    let join_error = |message: String| CliError::Join {
        key: spec.key.clone(),
        message,
    };
    let a = keyed(analytic, spec, &[&spec.analytic_column])?;
    let mut mc_columns = vec![spec.mc_column.as_str()];
    if let Some(se) = &spec.stderr_column {
        mc_columns.push(se);
    }
    let m = keyed(mc, spec, &mc_columns)?;
    if a.len() != m.len() {
        return Err(join_error(format!(
            "analytic has {} rows, Monte Carlo has {}",
            a.len(),
            m.len()
        )));
    }
    if m.is_empty() {
        return Err(join_error("no rows to compare".into()));
    }
    let mut rows = Vec::with_capacity(m.len());
    for (key, vals) in &m {
        let (_, av) = a
            .iter()
            .find(|(k, _)| same_key(*k, *key))
            .ok_or_else(|| join_error(format!("key {key} has no analytic row")))?;
        let (analytic, mc) = (av[0], vals[0]);
        let stderr = vals.get(1).copied();
        let abs_dev = (mc - analytic).abs();
        let rel_dev = if analytic == 0.0 {
            if abs_dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            abs_dev / analytic.abs()
        };
        let z = stderr.map(|se| {
            if se > 0.0 {
                (mc - analytic) / se
            } else if abs_dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        });
        let pass = spec.max_rel.map_or(true, |t| rel_dev <= t)
            && spec.max_abs.map_or(true, |t| abs_dev <= t)
            && spec.max_z.map_or(true, |t| z.is_some_and(|z| z.abs() <= t));
        rows.push(ComparisonRow {
            key: *key,
            analytic,
            mc,
            stderr,
            abs_dev,
            rel_dev,
            z,
            pass,
        });
    }
    Ok(ComparisonReport {
        key: spec.key.clone(),
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(f64, f64, f64)]) -> Table {
        let mut t = Table::new(["N", "value", "stderr"]);
        for &(k, v, s) in rows {
            t.push(vec![k.into(), v.into(), s.into()]);
        }
        t
    }

    #[test]
    fn identical_tables_pass_with_zero_deviation() {
        let t = table(&[(256.0, 0.1, 0.01), (512.0, 0.05, 0.005)]);
        let mut spec = ToleranceSpec::new("N", "value", "value");
        spec.stderr_column = Some("stderr".into());
        spec.max_z = Some(3.0);
        spec.max_rel = Some(0.0);
        let r = compare_report(&t, &t, &spec).unwrap();
        assert!(r.pass);
        assert!(r.rows.iter().all(|row| row.abs_dev == 0.0 && row.z == Some(0.0)));
    }

    #[test]
    fn z_gate_fails_outlier() {
        let a = table(&[(256.0, 1.0, 0.0)]);
        let m = table(&[(256.0, 1.5, 0.1)]);
        let mut spec = ToleranceSpec::new("N", "value", "value");
        spec.stderr_column = Some("stderr".into());
        spec.max_z = Some(3.0);
        let r = compare_report(&a, &m, &spec).unwrap();
        assert!(!r.pass);
        assert!((r.rows[0].z.unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn key_mismatch_is_join_error() {
        let a = table(&[(256.0, 1.0, 0.0)]);
        let m = table(&[(512.0, 1.0, 0.1)]);
        let err = compare_report(&a, &m, &ToleranceSpec::new("N", "value", "value")).unwrap_err();
        assert!(matches!(err, CliError::Join { .. }));
        let extra = table(&[(256.0, 1.0, 0.1), (512.0, 1.0, 0.1)]);
        assert!(compare_report(&a, &extra, &ToleranceSpec::new("N", "value", "value")).is_err());
    }

    #[test]
    fn key_range_filters_both_sides() {
        let a = table(&[(-2.0, 1.0, 0.0), (0.5, 1.0, 0.0)]);
        let m = table(&[(0.5, 1.05, 0.0), (3.0, 9.0, 0.0)]);
        let mut spec = ToleranceSpec::new("N", "value", "value");
        spec.key_range = Some([0.0, 1.0]);
        spec.max_rel = Some(0.1);
        let r = compare_report(&a, &m, &spec).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.pass);
    }
}
