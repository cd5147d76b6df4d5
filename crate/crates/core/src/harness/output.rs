use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of experiment output. Column order is part of the format;
/// unit suffixes name bits and slots. Channels are 1-based. List-valued
/// columns are `;`-separated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub mode: String,
    pub strategy: String,
    /// `point` for one grid point, `fit` for a summary over the grid.
    pub kind: String,
    /// Compact description of θ or of the prior.
    pub input: Option<String>,
    pub channels: usize,
    pub users: u32,
    pub sense_per_slot: usize,
    /// Empty on single-user `fit` rows.
    pub horizon_slots: Option<u64>,
    pub bandwidth_bits: f64,
    pub replications: Option<usize>,
    pub seed: Option<u64>,

    pub value_bits: Option<f64>,
    pub value_exact: Option<String>,
    pub myopic_value_bits: Option<f64>,
    pub bayes_myopic_value_bits: Option<f64>,
    pub first_action: Option<String>,
    pub after_free: Option<String>,
    pub after_busy: Option<String>,
    pub absorbing: Option<bool>,

    pub genie_value_bits: Option<f64>,
    pub mean_bits: Option<f64>,
    pub ci95_bits: Option<f64>,
    pub mean_loss_bits: Option<f64>,
    pub ci95_loss_bits: Option<f64>,
    pub mean_pseudo_loss_bits: Option<f64>,
    pub ci95_pseudo_loss_bits: Option<f64>,
    pub pseudo_loss_per_ln_t: Option<f64>,
    pub lower_bound_constant_bits: Option<f64>,
    pub closed_form: Option<f64>,

    pub per_user_loss_bits: Option<f64>,
    pub total_loss_bits: Option<f64>,
    pub lambda: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub max_deviation_gain: Option<f64>,

    pub fitted_exponent: Option<f64>,
    pub suboptimal_sense_exponent: Option<f64>,
    pub loss_per_ln_t_ratio: Option<f64>,
    pub fitted_slope: Option<f64>,

    pub probabilities: Option<String>,
    pub channel_frequencies: Option<String>,
    pub mean_sense_counts: Option<String>,
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn format_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| round12(*v).to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(';')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad list entry `{s}`")))
        })
        .collect()
}

fn fix(v: &mut Option<f64>) {
    *v = v.filter(|x| x.is_finite()).map(round12);
}

impl ResultRow {
    /// Applies the output precision, and drops non-finite values, so that
    /// rows survive a write/read cycle unchanged.
    pub fn normalized(mut self) -> Self {
        self.bandwidth_bits = round12(self.bandwidth_bits);
        for v in [
            &mut self.value_bits,
            &mut self.myopic_value_bits,
            &mut self.bayes_myopic_value_bits,
            &mut self.genie_value_bits,
            &mut self.mean_bits,
            &mut self.ci95_bits,
            &mut self.mean_loss_bits,
            &mut self.ci95_loss_bits,
            &mut self.mean_pseudo_loss_bits,
            &mut self.ci95_pseudo_loss_bits,
            &mut self.pseudo_loss_per_ln_t,
            &mut self.lower_bound_constant_bits,
            &mut self.closed_form,
            &mut self.per_user_loss_bits,
            &mut self.total_loss_bits,
            &mut self.lambda,
            &mut self.c1,
            &mut self.c2,
            &mut self.max_deviation_gain,
            &mut self.fitted_exponent,
            &mut self.suboptimal_sense_exponent,
            &mut self.loss_per_ln_t_ratio,
            &mut self.fitted_slope,
        ] {
            fix(v);
        }
        for s in [&mut self.input, &mut self.value_exact, &mut self.first_action, &mut self.after_free, &mut self.after_busy] {
            if s.as_deref() == Some("") {
                *s = None;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

pub fn render(rows: &[ResultRow], format: Format) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Writes `rows` to `path`. Nothing is created when there are no rows.
pub fn emit_results(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_results(text: &str, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Csv => csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(|e| Error::Io(e.to_string())),
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Io(e.to_string())),
    }
}
