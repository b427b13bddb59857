//! On-disk formats.
//!
//! CSV files start with two comment lines, `# kapitza <version>` and
//! `# config: <json>`, followed by a header row. JSON files carry the same
//! `version` and `config` beside the data. Floats are written in their
//! shortest round-trip form, so parsing a file and writing it again gives
//! identical bytes.

use clap::ValueEnum;
use kapitza_core::{HalfIndex, Spectrum};
use serde::{Deserialize, Serialize};

use crate::config::{Model, RunConfig};
use crate::error::{usage, CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const TOOL_PREFIX: &str = "# kapitza ";
const CONFIG_PREFIX: &str = "# config: ";
const SPECTRUM_COLUMNS: [&str; 4] = ["k", "n", "intensity", "stderr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// JSON documents open with a brace; anything else is read as CSV.
    pub fn detect(text: &str) -> Format {
        if text.trim_start().starts_with('{') {
            Format::Json
        } else {
            Format::Csv
        }
    }
}

/// Plain notation inside `[1e-4, 1e15)`, exponent notation outside it.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("malformed {what} {s:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    pub k: i64,
    pub n: f64,
    pub intensity: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    pub version: String,
    pub config: RunConfig,
    pub rows: Vec<Row>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumDoc {
    version: String,
    config: RunConfig,
    lines: Vec<Row>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    version: String,
    config: RunConfig,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn check_finite(values: impl IntoIterator<Item = f64>) -> CliResult<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(CliError::Numerical(
            "result contains a non-finite value".into(),
        ))
    }
}

fn csv_writer(buf: Vec<u8>) -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn header_lines(config: &RunConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    format!("{TOOL_PREFIX}{VERSION}\n{CONFIG_PREFIX}{json}\n")
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn json_text<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serializes");
    s.push('\n');
    s
}

/// Splits a CSV file into its version, config and the remaining body.
fn split_csv_header(text: &str) -> CliResult<(String, RunConfig, &str)> {
    let (first, rest) = text
        .split_once('\n')
        .ok_or_else(|| usage("file has no header"))?;
    let version = first
        .strip_prefix(TOOL_PREFIX)
        .ok_or_else(|| usage("first line is not a kapitza header"))?;
    let (second, body) = rest.split_once('\n').unwrap_or((rest, ""));
    let json = second
        .strip_prefix(CONFIG_PREFIX)
        .ok_or_else(|| usage("second line is not a config header"))?;
    let config =
        serde_json::from_str(json).map_err(|e| usage(format!("bad config header: {e}")))?;
    Ok((version.to_string(), config, body))
}

/// Reads the embedded configuration of any file written by this tool.
pub fn read_header(text: &str) -> CliResult<(Format, RunConfig)> {
    match Format::detect(text) {
        Format::Csv => split_csv_header(text).map(|(_, c, _)| (Format::Csv, c)),
        Format::Json => {
            #[derive(Deserialize)]
            struct Header {
                config: RunConfig,
            }
            let h: Header =
                serde_json::from_str(text).map_err(|e| usage(format!("malformed JSON: {e}")))?;
            Ok((Format::Json, h.config))
        }
    }
}

impl SpectrumFile {
    pub fn new(config: RunConfig, spectrum: &Spectrum) -> CliResult<Self> {
        let rows: Vec<Row> = spectrum
            .iter()
            .map(|(k, l)| Row {
                k: k.k(),
                n: k.n(),
                intensity: l.intensity,
                stderr: l.stderr,
            })
            .collect();
        check_finite(
            rows.iter()
                .flat_map(|r| [r.intensity, r.stderr.unwrap_or(0.0)]),
        )?;
        Ok(Self {
            version: VERSION.to_string(),
            config,
            rows,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut w = csv_writer(header_lines(&self.config).into_bytes());
                w.write_record(SPECTRUM_COLUMNS).expect("in-memory write");
                for r in &self.rows {
                    let stderr = r.stderr.map(fmt_f64).unwrap_or_default();
                    w.write_record([r.k.to_string(), fmt_f64(r.n), fmt_f64(r.intensity), stderr])
                        .expect("in-memory write");
                }
                finish_csv(w)
            }
            Format::Json => json_text(&SpectrumDoc {
                version: self.version.clone(),
                config: self.config.clone(),
                lines: self.rows.clone(),
            }),
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let file = match Format::detect(text) {
            Format::Csv => Self::parse_csv(text)?,
            Format::Json => {
                let doc: SpectrumDoc = serde_json::from_str(text)
                    .map_err(|e| usage(format!("malformed spectrum JSON: {e}")))?;
                Self {
                    version: doc.version,
                    config: doc.config,
                    rows: doc.lines,
                }
            }
        };
        file.validate()?;
        Ok(file)
    }

    fn parse_csv(text: &str) -> CliResult<Self> {
        let (version, config, body) = split_csv_header(text)?;
        let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| usage(format!("malformed CSV: {e}")))?;
        if headers.iter().ne(SPECTRUM_COLUMNS) {
            return Err(usage(format!(
                "expected columns k,n,intensity,stderr, got {headers:?}"
            )));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| usage(format!("malformed CSV: {e}")))?;
            let k = rec[0]
                .trim()
                .parse::<i64>()
                .map_err(|_| usage(format!("malformed label {:?}", &rec[0])))?;
            let stderr = match rec[3].trim() {
                "" => None,
                s => Some(parse_f64(s, "stderr")?),
            };
            rows.push(Row {
                k,
                n: parse_f64(&rec[1], "n")?,
                intensity: parse_f64(&rec[2], "intensity")?,
                stderr,
            });
        }
        Ok(Self {
            version,
            config,
            rows,
        })
    }

    fn validate(&self) -> CliResult<()> {
        if matches!(self.config, RunConfig::Figure(_)) {
            return Err(usage("figure tables are not spectrum files"));
        }
        for w in self.rows.windows(2) {
            if w[0].k >= w[1].k {
                return Err(usage(format!(
                    "labels not strictly increasing at k={}",
                    w[1].k
                )));
            }
        }
        for r in &self.rows {
            if r.n != HalfIndex::new(r.k).n() {
                return Err(usage(format!("row k={} has inconsistent n={}", r.k, r.n)));
            }
            if !r.intensity.is_finite() || !r.stderr.unwrap_or(0.0).is_finite() {
                return Err(usage(format!("row k={} has a non-finite value", r.k)));
            }
        }
        Ok(())
    }

    /// Rebuilds the spectrum, taking transit time, model and sample count
    /// from the embedded config.
    pub fn to_spectrum(&self) -> CliResult<Spectrum> {
        let (tau, model, samples) = match &self.config {
            RunConfig::Spectrum(s) => {
                let samples = (s.model == Model::Mc).then_some(s.trajectories);
                (s.tau, s.model.tag(), samples)
            }
            RunConfig::Mc(m) => (m.tau, Model::Mc.tag(), Some(m.trajectories)),
            RunConfig::Figure(_) => return Err(usage("figure tables are not spectrum files")),
        };
        let mut out = Spectrum::new(tau, model);
        out.samples = samples;
        for r in &self.rows {
            let k = HalfIndex::new(r.k);
            match r.stderr {
                Some(se) => out.insert_with_error(k, r.intensity, se),
                None => out.insert(k, r.intensity),
            }
        }
        Ok(out)
    }
}

/// Columnar figure data.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub config: RunConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(config: RunConfig, columns: Vec<String>) -> Self {
        Self {
            config,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        check_finite(self.rows.iter().flatten().copied())?;
        Ok(match format {
            Format::Csv => {
                let mut w = csv_writer(header_lines(&self.config).into_bytes());
                w.write_record(&self.columns).expect("in-memory write");
                for r in &self.rows {
                    w.write_record(r.iter().map(|v| fmt_f64(*v)))
                        .expect("in-memory write");
                }
                finish_csv(w)
            }
            Format::Json => json_text(&TableDoc {
                version: VERSION.to_string(),
                config: self.config.clone(),
                columns: self.columns.clone(),
                rows: self.rows.clone(),
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Initial, McRun, SpectrumRun, Zeta};
    use kapitza_core::ModelTag;

    fn sample_file() -> SpectrumFile {
        let config = RunConfig::Mc(McRun {
            tau: 3.0,
            trajectories: 1000,
            seed: 1,
            zeta: Zeta::Uniform,
            coupled: false,
            gamma: 0.2,
            initial: Initial::Even,
        });
        let mut s = Spectrum::new(3.0, ModelTag::MonteCarlo);
        s.insert_with_error(HalfIndex::new(-2), 0.125, 0.0104);
        s.insert_with_error(HalfIndex::new(0), 0.75, 1.0 / 7.0);
        s.insert(HalfIndex::new(3), 1.25e-300);
        SpectrumFile::new(config, &s).unwrap()
    }

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            -10.0,
            0.5,
            0.06763,
            1e-4,
            9.99e-5,
            1.0 / 3.0,
            1e15,
            6.02e23,
            5e-324,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(-10.0), "-10");
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1.5e-12), "1.5e-12");
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let text = sample_file().render(Format::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# kapitza {VERSION}"));
        assert!(lines[1].starts_with("# config: {\"command\":\"mc\""));
        assert_eq!(lines[2], "k,n,intensity,stderr");
        assert_eq!(lines[3], "-2,-1,0.125,0.0104");
        assert_eq!(lines[5], "3,1.5,1.25e-300,");
        let back = SpectrumFile::parse(&text).unwrap();
        assert_eq!(back, sample_file());
        assert_eq!(back.render(Format::Csv), text);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let text = sample_file().render(Format::Json);
        let back = SpectrumFile::parse(&text).unwrap();
        assert_eq!(back.render(Format::Json), text);
        assert_eq!(back.render(Format::Csv), sample_file().render(Format::Csv));
    }

    #[test]
    fn spectrum_keeps_sample_count_and_errors() {
        let s = sample_file().to_spectrum().unwrap();
        assert_eq!(s.samples, Some(1000));
        assert_eq!(s.line(HalfIndex::new(0)).unwrap().stderr, Some(1.0 / 7.0));
        assert_eq!(s.line(HalfIndex::new(3)).unwrap().stderr, None);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let good = sample_file().render(Format::Csv);
        for bad in [
            "".to_string(),
            good.replacen("# kapitza", "# other", 1),
            good.replacen("-2,-1,", "-2,-1.5,", 1),
            good.replacen("0.125", "abc", 1),
            good.replacen("k,n,intensity,stderr", "k,n,value,stderr", 1),
            good.replacen("\"tau\":3.0", "\"tau\":\"x\"", 1),
        ] {
            assert!(
                matches!(SpectrumFile::parse(&bad), Err(CliError::Usage(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn non_finite_results_are_numerical_failures() {
        let config = RunConfig::Spectrum(SpectrumRun {
            model: Model::Classical,
            tau: 0.0,
            gamma: 0.2,
            smooth: false,
            sigma_rel: 0.025,
            nmax: 0,
            initial: Initial::Even,
            seed: 0,
            trajectories: 1,
        });
        let mut s = Spectrum::new(0.0, ModelTag::Classical);
        s.insert(HalfIndex::ZERO, f64::NAN);
        assert!(matches!(
            SpectrumFile::new(config, &s),
            Err(CliError::Numerical(_))
        ));
    }

    #[test]
    fn header_is_readable_from_both_formats() {
        let f = sample_file();
        for fmt in [Format::Csv, Format::Json] {
            let (got, config) = read_header(&f.render(fmt)).unwrap();
            assert_eq!(got, fmt);
            assert_eq!(config, f.config);
        }
    }
}
