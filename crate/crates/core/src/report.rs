//! CSV export and import of analysis traces, sweep comparison, and the
//! pole/gain table emitted by the designer.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::analyses::{OperatingPoint, SweepTrace, TransientTrace};
use crate::error::{Error, Result};
use crate::filter::ZpkFilter;
use crate::netlist::Circuit;

pub const AC_HEADER: &str = "freq_hz,mag_db,phase_deg";

/// Magnitude drop that defines the cutoff, dB.
pub const F3DB_DROP_DB: f64 = 3.0103;

/// Scientific notation with 9 significant digits; negative zero prints as
/// zero so identical runs stay byte-identical.
pub fn fmt_num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

pub fn ac_csv(trace: &SweepTrace) -> String {
    let mut out = String::from(AC_HEADER);
    out.push('\n');
    for k in 0..trace.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(trace.frequencies[k]),
            fmt_num(trace.magnitude_db[k]),
            fmt_num(trace.phase_deg[k])
        );
    }
    out
}

pub fn tran_csv(trace: &TransientTrace) -> String {
    let mut header = vec!["time_s".to_string()];
    header.extend(trace.node_names.iter().map(|n| format!("v({n})")));
    header.extend(trace.element_names.iter().map(|n| format!("i({n})")));
    header.extend(trace.memristor_names.iter().map(|n| format!("x({n})")));
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..trace.steps() {
        let row: Vec<String> = std::iter::once(trace.times[k])
            .chain(trace.node_voltages.iter().map(|v| v[k]))
            .chain(trace.element_currents.iter().map(|i| i[k]))
            .chain(trace.memristor_states.iter().map(|x| x[k]))
            .map(fmt_num)
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Node voltages, auxiliary branch currents and memristor states.
pub fn op_csv(circuit: &Circuit, op: &OperatingPoint) -> String {
    let mut out = String::from("name,value\n");
    for (k, name) in circuit.nodes.names().iter().enumerate().skip(1) {
        let _ = writeln!(out, "v({name}),{}", fmt_num(op.node_voltages[k]));
    }
    for (name, i) in &op.branch_currents {
        let _ = writeln!(out, "i({name}),{}", fmt_num(*i));
    }
    for (name, x) in circuit.memristor_indices().iter().map(|&i| &circuit.elements[i].name).zip(&op.memristor_states) {
        let _ = writeln!(out, "x({name}),{}", fmt_num(x.value()));
    }
    out
}

/// Pole/zero/gain table: one `kind,re,im` row per entry.
pub fn zpk_table(filter: &ZpkFilter) -> String {
    let mut out = String::from("kind,re,im\n");
    let _ = writeln!(out, "gain,{},{}", fmt_num(filter.gain), fmt_num(0.0));
    for (kind, roots) in [("pole", &filter.poles), ("zero", &filter.zeros)] {
        for r in roots {
            let _ = writeln!(out, "{kind},{},{}", fmt_num(r.re), fmt_num(r.im));
        }
    }
    out
}

/// Samples read back from an `.ac.csv` file.
#[derive(Debug, Clone, PartialEq)]
pub struct AcTable {
    pub freq_hz: Vec<f64>,
    pub mag_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
}

impl AcTable {
    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }

    /// First frequency where the magnitude is 3.0103 dB below the first
    /// sample, interpolated in log-frequency.
    pub fn f3db(&self) -> Option<f64> {
        let target = self.mag_db.first()? - F3DB_DROP_DB;
        let k = self.mag_db.iter().position(|&m| m <= target)?;
        if k == 0 {
            return Some(self.freq_hz[0]);
        }
        let (m0, m1) = (self.mag_db[k - 1], self.mag_db[k]);
        let (l0, l1) = (self.freq_hz[k - 1].ln(), self.freq_hz[k].ln());
        let t = (m0 - target) / (m0 - m1);
        Some((l0 + t * (l1 - l0)).exp())
    }

    /// Magnitude and phase at `f`, linear in log-frequency. `f` must lie
    /// within the table's range.
    fn at(&self, f: f64) -> (f64, f64) {
        let n = self.len();
        let k = self.freq_hz.partition_point(|&x| x < f).clamp(1, n - 1);
        let (f0, f1) = (self.freq_hz[k - 1], self.freq_hz[k]);
        let t = ((f / f0).ln() / (f1 / f0).ln()).clamp(0.0, 1.0);
        let lerp = |y: &[f64]| y[k - 1] + t * (y[k] - y[k - 1]);
        (lerp(&self.mag_db), lerp(&self.phase_deg))
    }
}

impl From<&SweepTrace> for AcTable {
    fn from(t: &SweepTrace) -> Self {
        AcTable {
            freq_hz: t.frequencies.clone(),
            mag_db: t.magnitude_db.clone(),
            phase_deg: t.phase_deg.clone(),
        }
    }
}

pub fn parse_ac_csv(text: &str) -> Result<AcTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == AC_HEADER => {}
        Some((i, h)) => {
            return Err(Error::Csv(format!(
                "line {}: expected header '{AC_HEADER}', found '{}'",
                i + 1,
                h.trim()
            )))
        }
        None => return Err(Error::Csv("empty file".into())),
    }
    let mut table = AcTable {
        freq_hz: Vec::new(),
        mag_db: Vec::new(),
        phase_deg: Vec::new(),
    };
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Csv(format!("line {}: expected 3 columns, found {}", i + 1, fields.len())));
        }
        let mut vals = [0.0; 3];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Csv(format!("line {}: invalid number '{f}'", i + 1)))?;
        }
        if !(vals[0] > 0.0) || table.freq_hz.last().is_some_and(|&p| vals[0] <= p) {
            return Err(Error::Csv(format!(
                "line {}: frequencies must be positive and strictly increasing",
                i + 1
            )));
        }
        table.freq_hz.push(vals[0]);
        table.mag_db.push(vals[1]);
        table.phase_deg.push(vals[2]);
    }
    if table.len() < 2 {
        return Err(Error::Csv("need at least two samples".into()));
    }
    Ok(table)
}

/// Deviation between two sweeps over their common frequency range.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub max_mag_deviation_db: f64,
    /// Wrapped to [0, 180].
    pub max_phase_deviation_deg: f64,
    pub f3db_a: Option<f64>,
    pub f3db_b: Option<f64>,
}

impl ComparisonReport {
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "none".into());
        format!(
            "max_mag_deviation_db={}\nmax_phase_deviation_deg={}\nf3db_a={}\nf3db_b={}\n",
            fmt_num(self.max_mag_deviation_db),
            fmt_num(self.max_phase_deviation_deg),
            opt(self.f3db_a),
            opt(self.f3db_b)
        )
    }
}

/// Compare on the union of both grids restricted to the overlap, each
/// table interpolated linearly in log-frequency.
pub fn compare(a: &AcTable, b: &AcTable) -> Result<ComparisonReport> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Csv("need at least two samples per table".into()));
    }
    let lo = a.freq_hz[0].max(b.freq_hz[0]);
    let hi = a.freq_hz[a.len() - 1].min(b.freq_hz[b.len() - 1]);
    if !(lo < hi) {
        return Err(Error::Analysis(format!(
            "frequency ranges do not overlap ({:e}..{:e} Hz vs {:e}..{:e} Hz)",
            a.freq_hz[0],
            a.freq_hz[a.len() - 1],
            b.freq_hz[0],
            b.freq_hz[b.len() - 1]
        )));
    }
    let mut grid: Vec<f64> = a
        .freq_hz
        .iter()
        .chain(&b.freq_hz)
        .copied()
        .filter(|&f| f >= lo && f <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut mag: f64 = 0.0;
    let mut phase: f64 = 0.0;
    for f in grid {
        let (ma, pa) = a.at(f);
        let (mb, pb) = b.at(f);
        mag = mag.max((ma - mb).abs());
        phase = phase.max(((pa - pb + 180.0).rem_euclid(360.0) - 180.0).abs());
    }
    let within = |f: Option<f64>| f.filter(|&f| f >= lo && f <= hi);
    Ok(ComparisonReport {
        max_mag_deviation_db: mag,
        max_phase_deviation_deg: phase,
        f3db_a: within(a.f3db()),
        f3db_b: within(b.f3db()),
    })
}

/// Write `contents` to a sibling temporary file, then rename it over `path`
/// so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(name);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
