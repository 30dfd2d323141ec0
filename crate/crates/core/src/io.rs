//! JSON documents `{"kind", "payload", "meta"}` and wavefield CSV.
//!
//! Floats are written as `{:.16e}` (17 significant digits) so output is
//! byte-stable and round-trips exactly. Complex numbers are `[re, im]`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use thiserror::Error;

use crate::dynamics::WaveField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Jacobi,
    Moments,
    Measure,
    Response,
    Report,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Jacobi => "jacobi",
            Kind::Moments => "moments",
            Kind::Measure => "measure",
            Kind::Response => "response",
            Kind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_singular: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
}

impl Meta {
    pub fn new(tol_singular: Option<f64>, tol_residual: Option<f64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            tol_singular,
            tol_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub kind: Kind,
    pub payload: Value,
    pub meta: Meta,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: &'static str, found: &'static str },
}

impl Document {
    pub fn new<T: Serialize>(kind: Kind, payload: &T, meta: Meta) -> Result<Self, IoError> {
        Ok(Self {
            kind,
            payload: serde_json::to_value(payload)?,
            meta,
        })
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Payload of a document that must be of `kind`.
    pub fn payload_as<T: DeserializeOwned>(&self, kind: Kind) -> Result<T, IoError> {
        if self.kind != kind {
            return Err(IoError::WrongKind {
                expected: kind.name(),
                found: self.kind.name(),
            });
        }
        Ok(serde_json::from_value(self.payload.clone())?)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Pretty printer with fixed 17-significant-digit floats.
pub struct FixedFloatFormatter {
    inner: PrettyFormatter<'static>,
}

impl Default for FixedFloatFormatter {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

fn format_float(value: f64) -> String {
    if !value.is_finite() {
        return "null".to_string();
    }
    // -0.0 and 0.0 print identically
    let value = if value == 0.0 { 0.0 } else { value };
    format!("{value:.16e}")
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes with [`FixedFloatFormatter`] and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// `n,t,re,im` rows for sites `0..=N+1`, `t = -1..=T`.
pub fn wavefield_csv(field: &WaveField) -> String {
    let mut out = String::from("n,t,re,im\n");
    for (n, t, z) in field.iter() {
        writeln!(out, "{n},{t},{},{}", format_float(z.re), format_float(z.im)).expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentSequence;
    use crate::{c64, ComplexScalar};

    #[test]
    fn document_roundtrip_is_exact() {
        let s = MomentSequence::new(vec![c64(1.0, 0.0), c64(0.1, -1.0 / 3.0), c64(1e-300, 2e300)]);
        let doc = Document::new(Kind::Moments, &s, Meta::new(Some(1e-10), None)).unwrap();
        let text = doc.to_json();
        let back = Document::parse(&text).unwrap();
        assert_eq!(back.payload_as::<MomentSequence>(Kind::Moments).unwrap(), s);
        assert_eq!(back.to_json(), text);
        assert!(matches!(
            back.payload_as::<MomentSequence>(Kind::Measure),
            Err(IoError::WrongKind { .. })
        ));
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let z: ComplexScalar = c64(0.5, -0.0);
        let text = to_json(&z);
        assert!(text.contains("5.0000000000000000e-1"), "{text}");
        assert!(text.contains("0.0000000000000000e0"), "{text}");
    }
}
