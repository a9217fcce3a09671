//! C interface to the EDS graph reader, Smatch and trained parsers.
//!
//! Every function returns an [`EdsStatus`] code; on failure a description is
//! available from [`eds_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `*_free` function. Strings
//! returned through out-parameters are owned by the caller and released
//! with [`eds_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use edsparse::corpus::parse_sentences;
use edsparse::graph::{parse_eds, serialize_eds, EdsGraph};
use edsparse::pipeline::Parser;
use edsparse::smatch::smatch;
use edsparse::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidGraph = 4,
    Io = 5,
    Model = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// A parsed EDS graph.
pub struct EdsGraphHandle {
    graph: EdsGraph,
}

/// A trained two-stage parser.
pub struct EdsParserHandle {
    parser: Parser,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> EdsStatus {
    match e {
        Error::Syntax { .. } | Error::Format { .. } => EdsStatus::Syntax,
        Error::InvalidGraph(_) | Error::EmptyGraph | Error::AnchorOutOfBounds { .. } | Error::Unalignable { .. } => {
            EdsStatus::InvalidGraph
        }
        Error::Io { .. } => EdsStatus::Io,
        Error::Model(_) | Error::Json(_) | Error::Shape(_) => EdsStatus::Model,
        _ => EdsStatus::InvalidArgument,
    }
}

struct Failure(EdsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EdsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EdsStatus::Panic
        }
    }
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(EdsStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EdsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(EdsStatus::NullArgument, format!("{what} is NULL")))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(EdsStatus::NullArgument, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(EdsStatus::InvalidArgument, "output contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn eds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse one graph in the native text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eds_graph_parse(text: *const c_char, out: *mut *mut EdsGraphHandle) -> EdsStatus {
    guard(|| {
        check_out(out, "out")?;
        let graph = parse_eds(utf8(text, "text")?)?;
        *out = Box::into_raw(Box::new(EdsGraphHandle { graph }));
        Ok(())
    })
}

/// Serialize a graph in the native text format.
///
/// # Safety
/// `graph` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eds_graph_serialize(graph: *const EdsGraphHandle, out: *mut *mut c_char) -> EdsStatus {
    guard(|| {
        check_out(out, "out")?;
        let g = handle(graph, "graph")?;
        *out = to_c_string(serialize_eds(&g.graph))?;
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library; `nodes` and `edges` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eds_graph_size(
    graph: *const EdsGraphHandle,
    nodes: *mut usize,
    edges: *mut usize,
) -> EdsStatus {
    guard(|| {
        check_out(nodes, "nodes")?;
        check_out(edges, "edges")?;
        let g = handle(graph, "graph")?;
        *nodes = g.graph.node_count();
        *edges = g.graph.edge_count();
        Ok(())
    })
}

/// Store 1 in `out` if the graph is weakly connected, 0 otherwise. Fails on
/// the empty graph.
///
/// # Safety
/// `graph` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn eds_graph_is_connected(graph: *const EdsGraphHandle, out: *mut c_int) -> EdsStatus {
    guard(|| {
        check_out(out, "out")?;
        let g = handle(graph, "graph")?;
        *out = g.graph.is_connected()? as c_int;
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library or be NULL; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn eds_graph_free(graph: *mut EdsGraphHandle) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Smatch precision, recall and F of `pred` against `gold` by hill climbing
/// with `restarts` starts (at least one) seeded by `seed`.
///
/// # Safety
/// Handles must come from this library; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eds_smatch(
    pred: *const EdsGraphHandle,
    gold: *const EdsGraphHandle,
    restarts: usize,
    seed: u64,
    precision: *mut f64,
    recall: *mut f64,
    f: *mut f64,
) -> EdsStatus {
    guard(|| {
        check_out(precision, "precision")?;
        check_out(recall, "recall")?;
        check_out(f, "f")?;
        let (p, g) = (handle(pred, "pred")?, handle(gold, "gold")?);
        let result = smatch(&p.graph, &g.graph, restarts, seed);
        *precision = result.triples.precision;
        *recall = result.triples.recall;
        *f = result.triples.f;
        Ok(())
    })
}

/// Load a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eds_parser_load(path: *const c_char, out: *mut *mut EdsParserHandle) -> EdsStatus {
    guard(|| {
        check_out(out, "out")?;
        let parser = Parser::load(Path::new(utf8(path, "path")?))?;
        *out = Box::into_raw(Box::new(EdsParserHandle { parser }));
        Ok(())
    })
}

/// Parse one sentence given as a block of the tokenized sentence format
/// (`#id`, `#text` and one tab-separated line per token). A nonzero
/// `connected` forces connected output.
///
/// # Safety
/// `parser` must come from this library; `sentence` must be a
/// NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eds_parser_parse(
    parser: *const EdsParserHandle,
    sentence: *const c_char,
    connected: c_int,
    out: *mut *mut EdsGraphHandle,
) -> EdsStatus {
    guard(|| {
        check_out(out, "out")?;
        let p = handle(parser, "parser")?;
        let mut sentences = parse_sentences(utf8(sentence, "sentence")?, "sentence")?;
        if sentences.len() != 1 {
            return Err(Failure(
                EdsStatus::InvalidArgument,
                format!("expected one sentence, found {}", sentences.len()),
            ));
        }
        let s = sentences.remove(0);
        let graph = p.parser.parse(&s, connected != 0, None)?;
        *out = Box::into_raw(Box::new(EdsGraphHandle { graph }));
        Ok(())
    })
}

/// # Safety
/// `parser` must come from this library or be NULL; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn eds_parser_free(parser: *mut EdsParserHandle) {
    if !parser.is_null() {
        drop(Box::from_raw(parser));
    }
}

/// # Safety
/// `s` must be a string returned by this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn eds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
