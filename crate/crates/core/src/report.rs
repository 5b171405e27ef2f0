//! JSON output: every finite real is written with 17 significant digits,
//! non-finite reals as `null`.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter, Serializer};

use crate::error::{Error, Result};

struct Digits17<F> {
    inner: F,
}

fn write_real<W: ?Sized + io::Write>(w: &mut W, v: f64) -> io::Result<()> {
    write!(w, "{v:.16e}")
}

impl<F: Formatter> Formatter for Digits17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_real(w, v)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_real(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value`; `indent` = 0 gives compact single-line output.
pub fn to_json<T: Serialize + ?Sized>(value: &T, indent: usize) -> Result<String> {
    let mut out = Vec::new();
    let res = if indent == 0 {
        let mut ser = Serializer::with_formatter(&mut out, Digits17 { inner: CompactFormatter });
        value.serialize(&mut ser)
    } else {
        let pad = vec![b' '; indent];
        let mut ser = Serializer::with_formatter(&mut out, Digits17 { inner: PrettyFormatter::with_indent(&pad) });
        value.serialize(&mut ser)
    };
    res.map_err(|e| Error::invalid(format!("report serialization failed: {e}")))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}
