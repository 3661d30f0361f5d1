use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::run::ResultRow;
use crate::error::{Error, Result};

/// Per-(method, M, T) statistics across instances. `std_fidelity` is the
/// population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub mean_nfev: f64,
    pub count: usize,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    method: String,
    m: usize,
    t: OrderedTime,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct OrderedTime(i64);

impl OrderedTime {
    fn new(t: f64) -> Self {
        // total order on f64 bit patterns
        let bits = t.to_bits() as i64;
        OrderedTime(bits ^ (((bits >> 63) as u64) >> 1) as i64)
    }
}

/// Groups successful rows by (method, M, T); failed rows are skipped.
pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<Key, (f64, Vec<&ResultRow>)> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.failed() && r.fidelity.is_finite()) {
        let key = Key {
            method: row.method.clone(),
            m: row.m,
            t: OrderedTime::new(row.t),
        };
        groups.entry(key).or_insert_with(|| (row.t, Vec::new())).1.push(row);
    }
    groups
        .into_iter()
        .map(|(key, (t, members))| {
            let count = members.len();
            let c = count as f64;
            let mean = members.iter().map(|r| r.fidelity).sum::<f64>() / c;
            let var = members.iter().map(|r| (r.fidelity - mean).powi(2)).sum::<f64>() / c;
            SummaryRow {
                method: key.method,
                m: key.m,
                t,
                mean_fidelity: mean,
                std_fidelity: var.sqrt(),
                mean_nfev: members.iter().map(|r| r.n_fev as f64).sum::<f64>() / c,
                count,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["method", "M", "T", "mean_fidelity", "std_fidelity", "mean_nfev", "count"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
