use std::io::{Read, Write};

use serde::Serialize;

/// One diagnostic sample. The first eight fields are the persisted CSV
/// columns; the rest are only available for traces produced in-process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub quad_energy: f64,
    pub total_energy: f64,
    /// `int mu(s) ||grad w(t, s)||^2 ds`
    pub memory_norm: f64,
    /// Cumulative dissipation `D(t)`.
    pub dissipation: f64,
    #[serde(rename = "I0")]
    pub i0: f64,
    pub grad_norm: f64,
    /// `||u_t||_{m+1}^{m+1}`
    pub damp_power: f64,
    /// `-1/2 int mu'(s) ||grad w||^2 ds`
    #[serde(skip)]
    pub memory_dissipation: f64,
    /// `N'(t) = int u u_t dx`
    #[serde(skip)]
    pub n_prime: f64,
}

pub const CSV_HEADER: [&str; 8] = ["t", "quad_energy", "total_energy", "memory_norm", "dissipation", "I0", "grad_norm", "damp_power"];

impl TraceRecord {
    fn columns(&self) -> [f64; 8] {
        [self.t, self.quad_energy, self.total_energy, self.memory_norm, self.dissipation, self.i0, self.grad_norm, self.damp_power]
    }

    fn from_columns(c: [f64; 8]) -> Self {
        Self {
            t: c[0],
            quad_energy: c[1],
            total_energy: c[2],
            memory_norm: c[3],
            dissipation: c[4],
            i0: c[5],
            grad_norm: c[6],
            damp_power: c[7],
            memory_dissipation: f64::NAN,
            n_prime: f64::NAN,
        }
    }
}

/// Sampled time series of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("trace CSV: {0}")]
    Format(String),
}

impl EnergyTrace {
    pub fn new(records: Vec<TraceRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&TraceRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    /// `E(t) + D(t) - E(0)` at every sample.
    pub fn identity_residuals(&self) -> Vec<f64> {
        let Some(e0) = self.first().map(|r| r.total_energy) else {
            return Vec::new();
        };
        self.records.iter().map(|r| r.total_energy + r.dissipation - e0).collect()
    }

    /// Writes the eight persisted columns with a header row. Floats use the
    /// shortest round-trip representation, so output is deterministic.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TraceIoError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record(r.columns().iter().map(|x| format!("{x:?}")))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, TraceIoError> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(TraceIoError::Format(format!("unexpected header {header:?}")));
        }
        let mut records = Vec::new();
        for (line, row) in rd.records().enumerate() {
            let row = row?;
            let mut c = [0.0; 8];
            for (k, field) in row.iter().enumerate() {
                c[k] = field
                    .trim()
                    .parse()
                    .map_err(|_| TraceIoError::Format(format!("row {}: cannot parse `{field}`", line + 1)))?;
            }
            records.push(TraceRecord::from_columns(c));
        }
        if records.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(TraceIoError::Format("time column must be strictly increasing".into()));
        }
        Ok(Self { records })
    }
}
