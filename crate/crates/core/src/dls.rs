//! Duckworth-Lewis-Stern resource table.
//!
//! The table stores the fraction of scoring resources remaining for each
//! (overs remaining, wickets lost) pair: 50 rows for overs 50 down to 1 and
//! 10 columns for wickets 0 through 9. The CSV layout is a header row
//! `overs_remaining,w0,...,w9` followed by the 50 data rows, values as
//! decimals in `[0, 1]`.
//!
//! The table contents are an external asset; lookups never interpolate.

use std::io::Read;

#[derive(Debug, thiserror::Error)]
pub enum DlsError {
    #[error("csv format error: {0}")]
    Format(String),
    #[error("csv read error: {0}")]
    Csv(#[from] csv::Error),
    #[error("lookup out of range: overs_remaining {overs_remaining}, wickets_lost {wickets_lost}")]
    Lookup {
        overs_remaining: u8,
        wickets_lost: u8,
    },
}

/// Resource fractions indexed by (overs remaining 1..=50, wickets lost 0..=9).
#[derive(Debug, Clone, PartialEq)]
pub struct DlsTable {
    // cells[o - 1][w] = resources left with o overs remaining, w wickets lost
    cells: Vec<[f64; 10]>,
}

impl DlsTable {
    /// Parse the CSV layout described in the module docs.
    ///
    /// Shape problems are hard errors. Monotonicity violations (resources
    /// must not increase as wickets fall, nor decrease as overs remain)
    /// are returned as warnings; published tables satisfy both.
    pub fn parse_csv<R: Read>(reader: R) -> Result<(DlsTable, Vec<String>), DlsError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = csv_reader.headers()?.clone();
        if headers.len() != 11 {
            return Err(DlsError::Format(format!(
                "expected 11 columns (overs_remaining,w0..w9), found {}",
                headers.len()
            )));
        }

        let mut cells = vec![[0.0f64; 10]; 50];
        let mut seen = [false; 50];
        let mut rows = 0usize;
        for record in csv_reader.records() {
            let record = record?;
            if record.len() != 11 {
                return Err(DlsError::Format(format!(
                    "row {} has {} columns, expected 11",
                    rows + 2,
                    record.len()
                )));
            }
            let overs: usize = record[0]
                .parse()
                .map_err(|_| DlsError::Format(format!("bad overs_remaining `{}`", &record[0])))?;
            if !(1..=50).contains(&overs) {
                return Err(DlsError::Format(format!(
                    "overs_remaining {overs} outside 1..=50"
                )));
            }
            if seen[overs - 1] {
                return Err(DlsError::Format(format!(
                    "duplicate row for overs_remaining {overs}"
                )));
            }
            seen[overs - 1] = true;
            for w in 0..10 {
                let value: f64 = record[w + 1]
                    .parse()
                    .map_err(|_| DlsError::Format(format!("bad value `{}`", &record[w + 1])))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(DlsError::Format(format!(
                        "value {value} at overs {overs} wickets {w} outside [0,1]"
                    )));
                }
                cells[overs - 1][w] = value;
            }
            rows += 1;
        }
        if rows != 50 {
            return Err(DlsError::Format(format!(
                "expected 50 data rows, found {rows}"
            )));
        }

        let table = DlsTable { cells };
        Ok((table.clone(), table.monotonicity_warnings()))
    }

    fn monotonicity_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        for o in 1..=50usize {
            for w in 1..10usize {
                if self.cells[o - 1][w] > self.cells[o - 1][w - 1] {
                    warnings.push(format!(
                        "resources increase with wickets at overs_remaining {o}: w{} {} > w{} {}",
                        w,
                        self.cells[o - 1][w],
                        w - 1,
                        self.cells[o - 1][w - 1]
                    ));
                }
            }
        }
        for o in 2..=50usize {
            for w in 0..10usize {
                if self.cells[o - 1][w] < self.cells[o - 2][w] {
                    warnings.push(format!(
                        "resources decrease with overs at wickets {w}: overs {o} {} < overs {} {}",
                        self.cells[o - 1][w],
                        o - 1,
                        self.cells[o - 2][w]
                    ));
                }
            }
        }
        warnings
    }

    /// Exact stored resource fraction; `overs_remaining = 0` is 0 by
    /// definition (no resources at the end of an innings).
    pub fn resources_left(&self, overs_remaining: u8, wickets_lost: u8) -> Result<f64, DlsError> {
        if overs_remaining == 0 {
            return Ok(0.0);
        }
        if overs_remaining > 50 || wickets_lost > 9 {
            return Err(DlsError::Lookup {
                overs_remaining,
                wickets_lost,
            });
        }
        Ok(self.cells[overs_remaining as usize - 1][wickets_lost as usize])
    }
}
