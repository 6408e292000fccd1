//! C ABI over the corrnet library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/builder
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CorrnetStatus`]; on failure the message is available from
//! [`corrnet_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use corrnet::community::{detect_communities, Partition};
use corrnet::correlation::{correlation_matrix, CorrelationMatrix, MatrixKind};
use corrnet::filtergraph::{build_graph, FilteredGraph, GraphKind};
use corrnet::matrix::SquareMatrix;
use corrnet::pipeline::{run_pipeline, PipelineConfig};
use corrnet::rmt::{abs_matrix, default_mode_spec, eigendecompose, mode_matrix, mp_bounds, EigenSystem, Mode, ModeOverrides};
use corrnet::synth::ticker_name;
use corrnet::timeseries::{load_prices, prepare_returns, Layout};
use corrnet::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Conflict = 5,
    EmptySector = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrnetGraphKind {
    Mst = 0,
    Pmfg = 1,
}

/// Correlation or mode matrix with its tickers.
pub struct CorrnetMatrix(CorrelationMatrix);

/// Eigenvalues and eigenvectors of a correlation matrix.
pub struct CorrnetSpectrum(EigenSystem);

/// MST or PMFG.
pub struct CorrnetGraph(FilteredGraph);

/// Community assignment of graph nodes.
pub struct CorrnetPartition(Partition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CorrnetStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        let mut inner = &e;
        while let Error::Stage { source, .. } = inner {
            inner = source;
        }
        let status = match inner {
            Error::Io { .. } => CorrnetStatus::Io,
            Error::Parse { .. } | Error::LeadingGap { .. } => CorrnetStatus::Parse,
            Error::Conflict(_) => CorrnetStatus::Conflict,
            Error::EmptySector => CorrnetStatus::EmptySector,
            Error::NoConvergence { .. } | Error::ZeroVariance(_) | Error::Disconnected => CorrnetStatus::Numerical,
            _ => CorrnetStatus::InvalidArgument,
        };
        Failure(status, msg)
    }
}

fn null(what: &str) -> Failure {
    Failure(CorrnetStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CorrnetStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CorrnetStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CorrnetStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            CorrnetStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(invalid(format!("buffer holds {len} values, {} needed", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn corrnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn corrnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Correlation matrix from `n * n` row-major values. The matrix must be
/// symmetric with a unit diagonal and entries in [-1, 1].
///
/// # Safety
/// `values` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_from_values(n: usize, values: *const f64, out: *mut *mut CorrnetMatrix) -> CorrnetStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let len = n.checked_mul(n).ok_or_else(|| invalid("dimension overflows"))?;
        let v = std::slice::from_raw_parts(values, len);
        let m = SquareMatrix::from_fn(n, |i, j| v[i * n + j]);
        let c = CorrelationMatrix::new((0..n).map(ticker_name).collect(), m, MatrixKind::Full)?;
        put(out, CorrnetMatrix(c))
    })
}

/// Reads a matrix written by the library (or the `corrnet` CLI).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_read_csv(path: *const c_char, out: *mut *mut CorrnetMatrix) -> CorrnetStatus {
    guard(|| {
        let p = path_arg(path, "path")?;
        let f = File::open(&p).map_err(|e| Failure(CorrnetStatus::Io, format!("{}: {e}", p.display())))?;
        put(out, CorrnetMatrix(CorrelationMatrix::read_csv(f)?))
    })
}

/// Equal-time correlation matrix of the log returns over `dt` steps of a
/// wide, comma-separated price file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_from_prices(path: *const c_char, dt: usize, out: *mut *mut CorrnetMatrix) -> CorrnetStatus {
    guard(|| {
        let panel = load_prices(path_arg(path, "path")?, Layout::Wide, b',')?;
        let (returns, _) = prepare_returns(&panel, dt)?;
        put(out, CorrnetMatrix(correlation_matrix(&returns)?))
    })
}

/// # Safety
/// `m` must be a live matrix handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_write_csv(m: *const CorrnetMatrix, path: *const c_char) -> CorrnetStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let p = path_arg(path, "path")?;
        let f = File::create(&p).map_err(|e| Failure(CorrnetStatus::Io, format!("{}: {e}", p.display())))?;
        Ok(m.0.write_csv(f)?)
    })
}

/// Dimension of the matrix; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_dim(m: *const CorrnetMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// # Safety
/// `m` must be a live matrix handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_get(m: *const CorrnetMatrix, i: usize, j: usize, value: *mut f64) -> CorrnetStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        if i >= m.0.n() || j >= m.0.n() {
            return Err(invalid(format!("index ({i}, {j}) out of range for N = {}", m.0.n())));
        }
        if value.is_null() {
            return Err(null("value"));
        }
        *value = m.0.get(i, j);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrnet_matrix_free(m: *mut CorrnetMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Eigen-decomposition, eigenvalues in descending order.
///
/// # Safety
/// `m` must be a live matrix handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_spectrum_new(m: *const CorrnetMatrix, out: *mut *mut CorrnetSpectrum) -> CorrnetStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        put(out, CorrnetSpectrum(eigendecompose(&m.0)?))
    })
}

/// Number of eigenvalues; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn corrnet_spectrum_len(s: *const CorrnetSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.0.n())
}

/// Copies the eigenvalues into `buf`, which must hold `corrnet_spectrum_len` values.
///
/// # Safety
/// `s` must be a live spectrum handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn corrnet_spectrum_eigenvalues(s: *const CorrnetSpectrum, buf: *mut f64, len: usize) -> CorrnetStatus {
    guard(|| copy_out(&deref(s, "spectrum")?.0.eigenvalues, buf, len))
}

/// Sector-mode matrix from the modes above the noise band for `n_obs`
/// observations, eigenvalue-weighted. With `absolute` the entries are
/// replaced by their magnitudes.
///
/// # Safety
/// `s` must be a live spectrum handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_spectrum_sector_mode(
    s: *const CorrnetSpectrum,
    n_obs: usize,
    absolute: bool,
    out: *mut *mut CorrnetMatrix,
) -> CorrnetStatus {
    guard(|| {
        let es = &deref(s, "spectrum")?.0;
        let bounds = mp_bounds(es.n(), n_obs)?;
        let spec = default_mode_spec(es, &bounds, &ModeOverrides::default())?;
        let sec = mode_matrix(es, &spec, Mode::Sector, true)?;
        put(out, CorrnetMatrix(if absolute { abs_matrix(&sec) } else { sec }))
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrnet_spectrum_free(s: *mut CorrnetSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Noise-band edges for `n` series of `t` observations.
///
/// # Safety
/// `lambda_min` and `lambda_max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_mp_bounds(n: usize, t: usize, lambda_min: *mut f64, lambda_max: *mut f64) -> CorrnetStatus {
    guard(|| {
        if lambda_min.is_null() || lambda_max.is_null() {
            return Err(null("bound output"));
        }
        let b = mp_bounds(n, t)?;
        *lambda_min = b.lambda_min;
        *lambda_max = b.lambda_max;
        Ok(())
    })
}

/// # Safety
/// `m` must be a live matrix handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_graph_build(m: *const CorrnetMatrix, kind: CorrnetGraphKind, out: *mut *mut CorrnetGraph) -> CorrnetStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let kind = match kind {
            CorrnetGraphKind::Mst => GraphKind::Mst,
            CorrnetGraphKind::Pmfg => GraphKind::Pmfg,
        };
        put(out, CorrnetGraph(build_graph(&m.0, kind)?))
    })
}

/// Number of edges; 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn corrnet_graph_edge_count(g: *const CorrnetGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edges.len())
}

/// Copies the edges in insertion order; each buffer must hold
/// `corrnet_graph_edge_count` entries.
///
/// # Safety
/// `g` must be a live graph handle; every buffer must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn corrnet_graph_edges(
    g: *const CorrnetGraph,
    from: *mut usize,
    to: *mut usize,
    weight: *mut f64,
    len: usize,
) -> CorrnetStatus {
    guard(|| {
        let g = &deref(g, "graph")?.0;
        copy_out(&g.edges.iter().map(|e| e.i).collect::<Vec<_>>(), from, len)?;
        copy_out(&g.edges.iter().map(|e| e.j).collect::<Vec<_>>(), to, len)?;
        copy_out(&g.edges.iter().map(|e| e.weight).collect::<Vec<_>>(), weight, len)
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrnet_graph_free(g: *mut CorrnetGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Map-equation communities of the graph.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_communities(g: *const CorrnetGraph, seed: u64, out: *mut *mut CorrnetPartition) -> CorrnetStatus {
    guard(|| {
        let g = deref(g, "graph")?;
        put(out, CorrnetPartition(detect_communities(&g.0, seed)?))
    })
}

/// Number of communities; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn corrnet_partition_count(p: *const CorrnetPartition) -> usize {
    p.as_ref().map_or(0, |p| p.0.groups.len())
}

/// Number of nodes; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn corrnet_partition_len(p: *const CorrnetPartition) -> usize {
    p.as_ref().map_or(0, |p| p.0.n_nodes())
}

/// Community index per node.
///
/// # Safety
/// `p` must be a live partition handle; `buf` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn corrnet_partition_assignment(p: *const CorrnetPartition, buf: *mut usize, len: usize) -> CorrnetStatus {
    guard(|| copy_out(&deref(p, "partition")?.0.assignment(), buf, len))
}

/// Two-level description length in bits.
///
/// # Safety
/// `p` must be a live partition handle; `bits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrnet_partition_codelength(p: *const CorrnetPartition, bits: *mut f64) -> CorrnetStatus {
    guard(|| {
        let p = deref(p, "partition")?;
        if bits.is_null() {
            return Err(null("bits"));
        }
        *bits = p.0.codelength.ok_or_else(|| invalid("partition carries no codelength"))?;
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrnet_partition_free(p: *mut CorrnetPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs the full analysis described by a TOML config into `output_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn corrnet_run_pipeline(config_path: *const c_char, output_dir: *const c_char) -> CorrnetStatus {
    guard(|| {
        let mut cfg = PipelineConfig::load(&path_arg(config_path, "config path")?)?;
        cfg.output = path_arg(output_dir, "output directory")?;
        run_pipeline(&cfg)?;
        Ok(())
    })
}
