//! File formats: plain PBM/PGM images, the one-line hex state encoding,
//! the fixed-width binary catalog sidecar, CSV/JSON writers for every
//! analysis product, and checksum helpers.
//!
//! Conventions, fixed here and documented in the README:
//! - CSV: comma separated, one header row, LF line endings; optional `#`
//!   comment lines before the header documenting axes and normalization;
//!   floats at 17 significant digits (lossless f64 round-trip).
//! - PBM P1: `1` = alive. The reader is tolerant: comments and arbitrary
//!   whitespace anywhere after the magic, bit digits packed or separated.
//! - Hex states: fixed width of ceil(cells/4) nibbles, most significant
//!   nibble first, cell 0 the least significant bit; unused high bits must
//!   be zero.
//! - Catalog sidecar: little-endian records of (u32 initial condition,
//!   u16 period, u16 transient), 8 bytes per record, no header.

use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};

use sha2::{Digest, Sha256};

use crate::blob::{CentroidHistogram, FrameBlobStats};
use crate::engine::GenerationTrace;
use crate::lattice::BinaryState;
use crate::spectral::{DeltaSurface, PowerLawFit, Spectrum};
use crate::study::{AttractorCatalog, CatalogEntry, TransientSummary};
use crate::{Error, Result};

/// Largest pixel count accepted from an image header. Keeps malformed or
/// hostile headers from driving huge allocations.
pub const MAX_IMAGE_CELLS: usize = 1 << 24;

/// Largest value representable in a plain PGM file.
pub const PGM_MAX_GRAY: u64 = 65535;

/// Formats a float with 17 significant digits, round-tripping any f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Hex encoding of a binary state: ceil(cells/4) nibbles, MSB first.
pub fn state_to_hex(state: &BinaryState) -> String {
    let bits = state.bits();
    let nibbles = bits.len().div_ceil(4);
    let mut out = String::with_capacity(nibbles);
    for i in (0..nibbles).rev() {
        let mut nibble = 0u8;
        for b in 0..4 {
            let cell = 4 * i + b;
            if cell < bits.len() && bits[cell] == 1 {
                nibble |= 1 << b;
            }
        }
        write!(out, "{nibble:x}").expect("writing to a String cannot fail");
    }
    out
}

/// Inverse of [`state_to_hex`] over a known cell count. The string must be
/// exactly ceil(cells/4) nibbles and its unused high bits zero.
pub fn hex_to_state(hex: &str, cells: usize) -> Result<BinaryState> {
    let nibbles = cells.div_ceil(4);
    if hex.len() != nibbles {
        return Err(Error::Format(format!(
            "hex state for {cells} cells must be {nibbles} digits, got {}",
            hex.len()
        )));
    }
    let mut state = BinaryState::dead(cells);
    for (i, c) in hex.chars().enumerate() {
        let value = c.to_digit(16).ok_or_else(|| {
            Error::Format(format!("invalid hex digit '{c}' in state encoding"))
        })? as u8;
        let base = 4 * (nibbles - 1 - i);
        for b in 0..4 {
            if value >> b & 1 == 1 {
                let cell = base + b;
                if cell >= cells {
                    return Err(Error::Format(format!(
                        "hex state sets bit {cell} beyond the last cell {}",
                        cells - 1
                    )));
                }
                state.set(cell, true);
            }
        }
    }
    Ok(state)
}

/// Writes one state as a plain PBM (P1) image, `1` = alive, one lattice
/// row per line.
pub fn write_pbm(state: &BinaryState, side: usize, writer: &mut impl Write) -> Result<()> {
    if side * side != state.cell_count() {
        return Err(Error::Dimension(format!(
            "state has {} cells, not a {side}x{side} image",
            state.cell_count()
        )));
    }
    writeln!(writer, "P1")?;
    writeln!(writer, "{side} {side}")?;
    for row in 0..side {
        let line: Vec<&str> = (0..side)
            .map(|col| {
                if state.is_alive(row * side + col) {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Token scanner over PBM/PGM plain text: skips whitespace and `#` comments.
struct TokenScanner<'a> {
    rest: &'a str,
}

impl<'a> TokenScanner<'a> {
    fn new(input: &'a str) -> Self {
        TokenScanner { rest: input }
    }

    fn skip_separators(&mut self) {
        loop {
            self.rest = self.rest.trim_start();
            if let Some(stripped) = self.rest.strip_prefix('#') {
                self.rest = match stripped.find('\n') {
                    Some(end) => &stripped[end + 1..],
                    None => "",
                };
            } else {
                return;
            }
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_separators();
        if self.rest.is_empty() {
            return None;
        }
        let end = self
            .rest
            .find(char::is_whitespace)
            .unwrap_or(self.rest.len());
        let (token, rest) = self.rest.split_at(end);
        self.rest = rest;
        Some(token)
    }

    /// Single character, for the packed bit section of P1 files.
    fn bit_char(&mut self) -> Option<char> {
        self.skip_separators();
        let mut chars = self.rest.chars();
        let c = chars.next()?;
        self.rest = chars.as_str();
        Some(c)
    }

    fn at_end(&mut self) -> bool {
        self.skip_separators();
        self.rest.is_empty()
    }
}

fn parse_dimension(token: Option<&str>, what: &str) -> Result<usize> {
    let token = token.ok_or_else(|| Error::Format(format!("missing image {what}")))?;
    let value: usize = token
        .parse()
        .map_err(|_| Error::Format(format!("invalid image {what} '{token}'")))?;
    if value == 0 {
        return Err(Error::Format(format!("image {what} must be positive")));
    }
    Ok(value)
}

/// Parses a plain PBM (P1) image into (width, height, bits), `bits` in
/// row-major order with `1` = alive. Accepts comments and any whitespace;
/// bit digits may be packed or separated.
pub fn read_pbm(input: &str) -> Result<(usize, usize, BinaryState)> {
    let mut scanner = TokenScanner::new(input);
    match scanner.token() {
        Some("P1") => {}
        Some(other) => {
            return Err(Error::Format(format!(
                "expected PBM magic 'P1', found '{other}'"
            )))
        }
        None => return Err(Error::Format("empty PBM input".into())),
    }
    let width = parse_dimension(scanner.token(), "width")?;
    let height = parse_dimension(scanner.token(), "height")?;
    let cells = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_IMAGE_CELLS)
        .ok_or_else(|| {
            Error::Format(format!(
                "image {width}x{height} exceeds the {MAX_IMAGE_CELLS}-pixel limit"
            ))
        })?;
    let mut state = BinaryState::dead(cells);
    for cell in 0..cells {
        match scanner.bit_char() {
            Some('1') => state.set(cell, true),
            Some('0') => {}
            Some(other) => {
                return Err(Error::Format(format!(
                    "invalid PBM bit character '{other}'"
                )))
            }
            None => {
                return Err(Error::Format(format!(
                    "PBM data ended after {cell} of {cells} bits"
                )))
            }
        }
    }
    if !scanner.at_end() {
        return Err(Error::Format("trailing data after PBM bits".into()));
    }
    Ok((width, height, state))
}

/// Writes a centroid histogram as a plain PGM (P2) grayscale image. Counts
/// above [`PGM_MAX_GRAY`] are scaled proportionally so the largest count
/// maps to the maxval.
pub fn write_pgm(histogram: &CentroidHistogram, writer: &mut impl Write) -> Result<()> {
    let side = histogram.side();
    let max = histogram.counts().iter().copied().max().unwrap_or(0);
    let maxval = max.clamp(1, PGM_MAX_GRAY);
    let scale = |count: u64| -> u64 {
        if max <= PGM_MAX_GRAY {
            count
        } else {
            (count as u128 * PGM_MAX_GRAY as u128 / max as u128) as u64
        }
    };
    writeln!(writer, "P2")?;
    writeln!(writer, "{side} {side}")?;
    writeln!(writer, "{maxval}")?;
    for row in 0..side {
        let line: Vec<String> = (0..side)
            .map(|col| scale(histogram.count(row, col)).to_string())
            .collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Writes catalog rows in the fixed-width binary sidecar layout:
/// little-endian u32 initial condition, u16 period, u16 transient.
pub fn write_catalog_entries(
    entries: impl Iterator<Item = CatalogEntry>,
    writer: &mut impl Write,
) -> Result<()> {
    for entry in entries {
        writer.write_all(&entry.ic.to_le_bytes())?;
        writer.write_all(&entry.period.to_le_bytes())?;
        writer.write_all(&entry.transient.to_le_bytes())?;
    }
    Ok(())
}

/// Reads back a catalog sidecar written by [`write_catalog_entries`].
pub fn read_catalog_entries(reader: &mut impl Read) -> Result<Vec<CatalogEntry>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "catalog file length {} is not a multiple of the 8-byte record",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|record| CatalogEntry {
            ic: u32::from_le_bytes(record[0..4].try_into().expect("4-byte slice")),
            period: u16::from_le_bytes(record[4..6].try_into().expect("2-byte slice")),
            transient: u16::from_le_bytes(record[6..8].try_into().expect("2-byte slice")),
        })
        .collect())
}

/// Trace CSV: one row per generation with the hex-encoded binary state and
/// its alive count.
pub fn write_trace_csv(trace: &GenerationTrace, writer: &mut impl Write) -> Result<()> {
    writeln!(writer, "generation,state_hex,alive")?;
    for (k, state) in trace.states().iter().enumerate() {
        writeln!(writer, "{k},{},{}", state_to_hex(state), state.alive_count())?;
    }
    Ok(())
}

/// Delta-surface CSV: one row per (tau, sigma) grid point. The value is
/// the ensemble mean over the recorded number of initial conditions of the
/// fraction of cells differing from the classical run at generation 2
/// (0-based, after two rule applications).
pub fn write_delta_surface_csv(surface: &DeltaSurface, writer: &mut impl Write) -> Result<()> {
    writeln!(
        writer,
        "# delta = mean fraction of mismatched cells at generation index 2 (0-based), {} initial conditions per point",
        surface.ensemble_size()
    )?;
    writeln!(writer, "tau,sigma,delta")?;
    for (ti, &tau) in surface.tau_grid().iter().enumerate() {
        for (si, &sigma) in surface.sigma_grid().iter().enumerate() {
            writeln!(
                writer,
                "{},{},{}",
                fmt_float(tau),
                fmt_float(sigma),
                fmt_float(surface.value(ti, si))
            )?;
        }
    }
    Ok(())
}

/// Per-tau curve of the smallest sigma attaining the row minimum of the
/// delta surface.
pub fn write_sigma_min_csv(curve: &[(f64, f64)], writer: &mut impl Write) -> Result<()> {
    writeln!(writer, "tau,sigma_min")?;
    for &(tau, sigma) in curve {
        writeln!(writer, "{},{}", fmt_float(tau), fmt_float(sigma))?;
    }
    Ok(())
}

/// Power-spectrum CSV: frequency index f in 0..T-1 against
/// S(f) = sum over cells of |n~_cell(f)|^2 with the 1/T DFT normalization.
pub fn write_spectrum_csv(spectrum: &Spectrum, writer: &mut impl Write) -> Result<()> {
    writeln!(
        writer,
        "# f is the integer frequency index in 0..T-1; S(f) = sum_cells |(1/T) sum_t s(t) e^(-2 pi i t f / T)|^2"
    )?;
    writeln!(writer, "f,s")?;
    for (f, &s) in spectrum.values().iter().enumerate() {
        writeln!(writer, "{f},{}", fmt_float(s))?;
    }
    Ok(())
}

/// Power-law fit parameters as JSON.
pub fn write_fit_json(fit: &PowerLawFit, writer: &mut impl Write) -> Result<()> {
    let json = serde_json::json!({
        "c": fit.c,
        "alpha": fit.alpha,
        "f_lo": fit.f_lo,
        "f_hi": fit.f_hi,
        "excluded_zero_bins": fit.excluded_zero_bins,
        "rms_residual": fit.rms_residual,
    });
    serde_json::to_writer_pretty(&mut *writer, &json)
        .map_err(|e| Error::Format(format!("fit serialization failed: {e}")))?;
    writeln!(writer)?;
    Ok(())
}

fn optional(value: Option<f64>) -> String {
    match value {
        Some(v) => fmt_float(v),
        None => "NA".into(),
    }
}

/// Per-frame blob statistics CSV. Undefined values (no blobs, or a
/// correlation without two distinct centroids) print as NA.
pub fn write_blob_stats_csv(stats: &[FrameBlobStats], writer: &mut impl Write) -> Result<()> {
    writeln!(
        writer,
        "generation,alive,blobs,circ_min,circ_mean,circ_max,frame_centroid_row,frame_centroid_col,correlation"
    )?;
    for (k, frame) in stats.iter().enumerate() {
        writeln!(
            writer,
            "{k},{},{},{},{},{},{},{},{}",
            frame.alive_count,
            frame.blob_count,
            optional(frame.circ_min),
            optional(frame.circ_mean),
            optional(frame.circ_max),
            optional(frame.frame_centroid.map(|c| c.0)),
            optional(frame.frame_centroid.map(|c| c.1)),
            optional(frame.centroid_correlation),
        )?;
    }
    Ok(())
}

/// Centroid histogram CSV, one row per lattice cell.
pub fn write_histogram_csv(histogram: &CentroidHistogram, writer: &mut impl Write) -> Result<()> {
    writeln!(
        writer,
        "# counts of half-up-rounded frame centroids; {} all-dead frames skipped",
        histogram.skipped_dead_frames()
    )?;
    writeln!(writer, "row,col,count")?;
    let side = histogram.side();
    for row in 0..side {
        for col in 0..side {
            writeln!(writer, "{row},{col},{}", histogram.count(row, col))?;
        }
    }
    Ok(())
}

/// Census summary CSV, one row per observed period: distinct attractor
/// cycles, cycles up to lattice symmetry, basin totals, and transient
/// statistics.
pub fn write_census_csv(catalog: &AttractorCatalog, writer: &mut impl Write) -> Result<()> {
    let cycles = catalog.cycle_counts_by_period();
    let classes = catalog.symmetry_class_counts_by_period();
    let ics = catalog.ic_counts_by_period();
    let transients = crate::study::transient_statistics(catalog);
    writeln!(
        writer,
        "period,attractor_cycles,symmetry_classes,initial_conditions,max_transient,mean_transient"
    )?;
    for summary in &transients {
        writeln!(
            writer,
            "{},{},{},{},{},{}",
            summary.period,
            cycles[&summary.period],
            classes[&summary.period],
            ics[&summary.period],
            summary.max,
            fmt_float(summary.mean),
        )?;
    }
    Ok(())
}

/// Transient histogram CSV, one row per (period, transient) pair.
pub fn write_transient_histogram_csv(
    summaries: &[TransientSummary],
    writer: &mut impl Write,
) -> Result<()> {
    writeln!(writer, "period,transient,count")?;
    for summary in summaries {
        for (t, &count) in summary.histogram.iter().enumerate() {
            if count > 0 {
                writeln!(writer, "{},{t},{count}", summary.period)?;
            }
        }
    }
    Ok(())
}

/// Comparison-surface CSV: mean transient shift T_P and mean period shift
/// Omega_P per (tau, sigma, period). Strata with no samples print NA.
pub fn write_comparison_csv(
    surface: &crate::study::ComparisonSurface,
    writer: &mut impl Write,
) -> Result<()> {
    writeln!(
        writer,
        "# T_P and Omega_P are mean quantum-minus-classical transient and period shifts per classical-period stratum"
    )?;
    writeln!(writer, "tau,sigma,period,t_shift,omega_shift")?;
    for (ti, &tau) in surface.tau_grid().iter().enumerate() {
        for (si, &sigma) in surface.sigma_grid().iter().enumerate() {
            for stratum in surface.strata(ti, si) {
                let (t, omega) = if stratum.samples == 0 {
                    ("NA".into(), "NA".into())
                } else {
                    (
                        fmt_float(stratum.transient_shift),
                        fmt_float(stratum.period_shift),
                    )
                };
                writeln!(
                    writer,
                    "{},{},{},{t},{omega}",
                    fmt_float(tau),
                    fmt_float(sigma),
                    stratum.period
                )?;
            }
        }
    }
    Ok(())
}

/// Transfer matrix CSV, row-major, full precision, for
/// cross-implementation diffing.
pub fn write_matrix_csv(
    matrix: &nalgebra::DMatrix<f64>,
    writer: &mut impl Write,
) -> Result<()> {
    let header: Vec<String> = (0..matrix.ncols()).map(|c| format!("c{c}")).collect();
    writeln!(writer, "{}", header.join(","))?;
    for row in 0..matrix.nrows() {
        let line: Vec<String> = (0..matrix.ncols())
            .map(|col| fmt_float(matrix[(row, col)]))
            .collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    Ok(())
}

/// SHA-256 of a byte slice as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// SHA-256 of a file's contents as lowercase hex, streaming.
pub fn sha256_file(path: &std::path::Path) -> Result<String> {
    let file = std::fs::File::open(path)?;
    let mut reader = std::io::BufReader::new(file);
    let mut hasher = Sha256::new();
    loop {
        let chunk = reader.fill_buf()?;
        if chunk.is_empty() {
            break;
        }
        let n = chunk.len();
        hasher.update(chunk);
        reader.consume(n);
    }
    Ok(format!("{:x}", hasher.finalize()))
}
