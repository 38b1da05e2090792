//! File formats: JSON reports and plot-ready CSV tables.
//!
//! Every writer is deterministic: struct fields serialize in declaration
//! order and floats use the shortest representation that round-trips.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use scoremax_core::agent::BestResponse;
use scoremax_core::contracts::{MenuContract, RewardPair, Slot, StaticScoringRule};
use scoremax_core::model::{BeliefSystem, Signal};
use scoremax_core::optimizer::{Mode, SolveReport, SolvedContract};
use serde::{Deserialize, Serialize};

/// Kind column of static rule options.
pub const STATIC_KIND: &str = "S";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: row {row}: {reason}")]
    BadContract { path: PathBuf, row: usize, reason: String },
}

/// One contract option as written to `contract.csv` and embedded in the
/// report. Static options have no period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractRow {
    pub period: Option<usize>,
    pub kind: RowKind,
    pub r0: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    G,
    B,
    #[serde(rename = "AUX")]
    Aux,
    N,
    S,
}

impl ContractRow {
    fn from_slot(slot: Slot, r: RewardPair, tau: usize) -> Self {
        let (period, kind) = match slot {
            Slot::Signal(Signal::G, k) => (k, RowKind::G),
            Slot::Signal(Signal::B, k) => (k, RowKind::B),
            Slot::Aux(k) => (k, RowKind::Aux),
            Slot::Terminal => (tau, RowKind::N),
        };
        ContractRow { period: Some(period), kind, r0: r.r0, r1: r.r1 }
    }
}

pub fn menu_rows(c: &MenuContract) -> Vec<ContractRow> {
    c.slots().into_iter().map(|(slot, r)| ContractRow::from_slot(slot, r, c.tau)).collect()
}

pub fn static_rows(rule: &StaticScoringRule) -> Vec<ContractRow> {
    rule.options().iter().map(|r| ContractRow { period: None, kind: RowKind::S, r0: r.r0, r1: r.r1 }).collect()
}

pub fn contract_rows(c: &SolvedContract) -> Vec<ContractRow> {
    match c {
        SolvedContract::Menu(m) => menu_rows(m),
        SolvedContract::Static(r) => static_rows(r),
    }
}

/// Machine-readable outcome of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReportJson {
    pub tau_star: usize,
    pub mode: Mode,
    pub contract: Vec<ContractRow>,
    /// `(tau, feasible)` for every scanned horizon.
    pub scan: Vec<(usize, bool)>,
}

impl From<&SolveReport> for SolveReportJson {
    fn from(r: &SolveReport) -> Self {
        SolveReportJson {
            tau_star: r.tau_star,
            mode: r.mode,
            contract: contract_rows(&r.contract),
            scan: r.scan.iter().map(|e| (e.tau, e.feasible())).collect(),
        }
    }
}

/// Report written instead when a run fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mode: String,
    pub error: String,
}

pub fn output_path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{suffix}"))
}

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| FormatError::Write { path: dir.to_path_buf(), source })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| FormatError::Write { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut w = create(path)?;
    let werr = |source| FormatError::Write { path: path.to_path_buf(), source };
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| werr(e.into()))?;
    w.write_all(b"\n").map_err(werr)?;
    w.flush().map_err(werr)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), FormatError> {
    let cerr = |source| FormatError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(cerr)?;
    }
    w.flush().map_err(|source| FormatError::Write { path: path.to_path_buf(), source })
}

pub fn write_contract_csv(path: &Path, rows: &[ContractRow]) -> Result<(), FormatError> {
    write_csv(path, rows)
}

#[derive(Debug, Serialize)]
struct BeliefRow {
    period: usize,
    mu_n: f64,
    mu_g: Option<f64>,
    mu_b: Option<f64>,
}

/// `period, mu_n, mu_g, mu_b`: the no-information belief at node `k` and
/// the posteriors after a signal in period `k`; `K + 1` rows.
pub fn write_beliefs_csv(path: &Path, beliefs: &BeliefSystem) -> Result<(), FormatError> {
    write_csv(
        path,
        (0..=beliefs.periods()).map(|k| BeliefRow {
            period: k,
            mu_n: beliefs.no_info(k),
            mu_g: if k == 0 { None } else { beliefs.posterior(Signal::G, k) },
            mu_b: if k == 0 { None } else { beliefs.posterior(Signal::B, k) },
        }),
    )
}

#[derive(Debug, Serialize)]
struct ValueRow {
    period: usize,
    value: f64,
    stop_value: f64,
    action: &'static str,
}

/// `period, value, stop_value, action` at every no-signal node; `K + 1` rows.
pub fn write_value_csv(path: &Path, br: &BestResponse) -> Result<(), FormatError> {
    write_csv(
        path,
        br.value.iter().zip(&br.stop_value).zip(&br.action).enumerate().map(|(k, ((&value, &stop_value), a))| {
            ValueRow { period: k, value, stop_value, action: a.as_str() }
        }),
    )
}

/// Writes rows whose columns are not known statically.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), FormatError> {
    let cerr = |source| FormatError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(cerr)?;
    for r in rows {
        w.write_record(r).map_err(cerr)?;
    }
    w.flush().map_err(|source| FormatError::Write { path: path.to_path_buf(), source })
}

/// Contract loaded back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedContract {
    Menu(MenuContract),
    Static(StaticScoringRule),
}

pub fn read_contract_csv(path: &Path) -> Result<LoadedContract, FormatError> {
    let file = File::open(path).map_err(|source| FormatError::Read { path: path.to_path_buf(), source })?;
    let mut rdr = csv::Reader::from_reader(file);
    let rows = rdr
        .deserialize()
        .collect::<Result<Vec<ContractRow>, _>>()
        .map_err(|source| FormatError::Csv { path: path.to_path_buf(), source })?;
    contract_from_rows(&rows).map_err(|(row, reason)| FormatError::BadContract { path: path.to_path_buf(), row, reason })
}

/// Rebuilds a contract; errors carry the 1-based data row.
pub fn contract_from_rows(rows: &[ContractRow]) -> Result<LoadedContract, (usize, String)> {
    let pair = |i: usize, r: &ContractRow| RewardPair::new(r.r0, r.r1).map_err(|e| (i + 1, e.to_string()));
    if rows.is_empty() {
        return Err((0, "no options".into()));
    }
    if rows.iter().all(|r| r.kind == RowKind::S) {
        let opts = rows.iter().enumerate().map(|(i, r)| pair(i, r)).collect::<Result<Vec<_>, _>>()?;
        return StaticScoringRule::new(opts, None).map(LoadedContract::Static).map_err(|e| (1, e.to_string()));
    }
    let terminals: Vec<(usize, &ContractRow)> = rows.iter().enumerate().filter(|(_, r)| r.kind == RowKind::N).collect();
    let [(ti, term)] = terminals.as_slice() else {
        return Err((0, format!("expected exactly one N row, found {}", terminals.len())));
    };
    let tau = term.period.ok_or((ti + 1, "N row without a period".to_string()))?;
    let mut c = MenuContract::terminal_only(tau, pair(*ti, term)?);
    let mut aux: Vec<Option<RewardPair>> = vec![None; tau];
    for (i, r) in rows.iter().enumerate() {
        let k = r.period.ok_or((i + 1, "missing period".to_string()))?;
        let out_of_range = || (i + 1, format!("period {k} outside the horizon {tau}"));
        let slot = match r.kind {
            RowKind::N => continue,
            RowKind::S => return Err((i + 1, "static option inside a menu contract".into())),
            RowKind::G if (1..=tau).contains(&k) => &mut c.g_options[k - 1],
            RowKind::B if (1..=tau).contains(&k) => &mut c.b_options[k - 1],
            RowKind::Aux if k < tau => &mut aux[k],
            _ => return Err(out_of_range()),
        };
        if slot.replace(pair(i, r)?).is_some() {
            return Err((i + 1, "duplicate option".into()));
        }
    }
    if aux.iter().any(Option::is_some) {
        c.aux_n = Some(
            aux.into_iter()
                .enumerate()
                .map(|(k, a)| a.ok_or((0, format!("auxiliary option missing at node {k}"))))
                .collect::<Result<_, _>>()?,
        );
    }
    Ok(LoadedContract::Menu(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use scoremax_core::contracts::v_shaped_from_kink;
    use scoremax_core::model::{EnvironmentSpec, Rates};

    fn beliefs() -> BeliefSystem {
        BeliefSystem::new(EnvironmentSpec {
            delta: 0.1,
            periods: 6,
            prior: 0.4,
            cost: 0.2,
            lambda: Rates::new(2.0, 1.0, 0.5, 1.5),
        })
        .unwrap()
    }

    #[test]
    fn menu_rows_round_trip() {
        let b = beliefs();
        let mut c = MenuContract::constant(
            &b,
            3,
            RewardPair::new(0.1, 0.9).unwrap(),
            RewardPair::new(0.8, 0.05).unwrap(),
            RewardPair::new(0.6, 0.2).unwrap(),
        );
        c.aux_n = Some(vec![RewardPair::new(0.3, 0.3).unwrap(); 3]);
        let rows = menu_rows(&c);
        assert_eq!(rows.iter().filter(|r| r.kind == RowKind::N).count(), 1);
        assert_eq!(contract_from_rows(&rows).unwrap(), LoadedContract::Menu(c));
    }

    #[test]
    fn static_rows_round_trip() {
        let rule = v_shaped_from_kink(0.3).unwrap().rule();
        match contract_from_rows(&static_rows(&rule)).unwrap() {
            LoadedContract::Static(r) => assert_eq!(r.options(), rule.options()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_menus_are_rejected() {
        let row = |period, kind| ContractRow { period: Some(period), kind, r0: 0.5, r1: 0.5 };
        assert!(contract_from_rows(&[row(1, RowKind::G)]).is_err());
        assert_eq!(contract_from_rows(&[row(2, RowKind::N), row(3, RowKind::G)]).unwrap_err().0, 2);
        assert!(contract_from_rows(&[row(2, RowKind::N), row(1, RowKind::G), row(1, RowKind::G)]).is_err());
        let bad = ContractRow { period: Some(1), kind: RowKind::N, r0: 1.5, r1: 0.0 };
        assert!(contract_from_rows(&[bad]).is_err());
    }

    #[test]
    fn report_field_order_is_fixed() {
        let report = SolveReportJson {
            tau_star: 2,
            mode: Mode::Dynamic,
            contract: vec![ContractRow { period: Some(2), kind: RowKind::N, r0: 1.0, r1: 0.0 }],
            scan: vec![(0, true), (1, true), (2, true)],
        };
        let s = serde_json::to_string(&report).unwrap();
        assert_eq!(
            s,
            r#"{"tau_star":2,"mode":"dynamic","contract":[{"period":2,"kind":"N","r0":1.0,"r1":0.0}],"scan":[[0,true],[1,true],[2,true]]}"#
        );
    }
}
