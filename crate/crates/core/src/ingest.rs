//! Reading one column of a CSV file.

use std::fs::File;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Replacement for characters outside ASCII.
pub const SANITIZED_CHAR: char = '?';

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl ColumnSelector {
    /// A bare number is an index; anything else is a header name.
    pub fn parse(arg: &str) -> Self {
        match arg.parse() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(arg.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSource {
    pub path: PathBuf,
    pub column: ColumnSelector,
    pub header: bool,
    pub max_rows: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnData {
    pub values: Vec<String>,
    /// Cells in which at least one non-ASCII character was replaced.
    pub sanitized_cells: usize,
}

impl ColumnData {
    pub fn empty_cells(&self) -> usize {
        self.values.iter().filter(|v| v.is_empty()).count()
    }
}

fn sanitize(cell: &[u8]) -> (String, bool) {
    let text = String::from_utf8_lossy(cell);
    if text.is_ascii() {
        return (text.into_owned(), false);
    }
    (text.chars().map(|c| if c.is_ascii() { c } else { SANITIZED_CHAR }).collect(), true)
}

fn malformed(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::MalformedCsv { line, message: format!("{kind:?}") },
    }
}

pub fn read_column(src: &ColumnSource) -> Result<ColumnData> {
    if src.max_rows == Some(0) {
        return Err(Error::InvalidParameter("max_rows must be at least 1".into()));
    }
    let file = File::open(&src.path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(src.path.clone()),
        _ => Error::Io(e),
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(src.header).from_reader(file);
    let index = match &src.column {
        ColumnSelector::Index(i) => *i,
        ColumnSelector::Name(name) => {
            if !src.header {
                return Err(Error::ColumnNotFound(format!("{name} (file has no header)")));
            }
            reader
                .byte_headers()
                .map_err(malformed)?
                .iter()
                .position(|h| h == name.as_bytes())
                .ok_or_else(|| Error::ColumnNotFound(name.clone()))?
        }
    };
    let mut data = ColumnData::default();
    let mut record = csv::ByteRecord::new();
    while src.max_rows.is_none_or(|m| data.values.len() < m)
        && reader.read_byte_record(&mut record).map_err(malformed)?
    {
        let cell = record.get(index).ok_or_else(|| Error::ColumnNotFound(format!("column {index}")))?;
        let (value, changed) = sanitize(cell);
        data.sanitized_cells += changed as usize;
        data.values.push(value);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn src(f: &tempfile::NamedTempFile, column: ColumnSelector, header: bool) -> ColumnSource {
        ColumnSource { path: f.path().to_path_buf(), column, header, max_rows: None }
    }

    #[test]
    fn by_index_in_order() {
        let f = file("a,1\nb,2\nc,3\n");
        let got = read_column(&src(&f, ColumnSelector::Index(0), false)).unwrap();
        assert_eq!(got.values, ["a", "b", "c"]);
    }

    #[test]
    fn header_and_name() {
        let f = file("id,zip\n1,02139\n2,\n3,90210\n");
        let got = read_column(&src(&f, ColumnSelector::Name("zip".into()), true)).unwrap();
        assert_eq!(got.values, ["02139", "", "90210"]);
        assert_eq!(got.empty_cells(), 1);
        let got = read_column(&src(&f, ColumnSelector::Index(1), true)).unwrap();
        assert_eq!(got.values.len(), 3);
    }

    #[test]
    fn quoted_delimiter_verbatim() {
        let f = file("\"Smith, J.\",x\n\"say \"\"hi\"\"\",y\n");
        let got = read_column(&src(&f, ColumnSelector::Index(0), false)).unwrap();
        assert_eq!(got.values, ["Smith, J.", "say \"hi\""]);
    }

    #[test]
    fn max_rows_and_sanitizing() {
        let f = file("caf\u{e9}\nabc\nxyz\n");
        let mut s = src(&f, ColumnSelector::Index(0), false);
        s.max_rows = Some(2);
        let got = read_column(&s).unwrap();
        assert_eq!(got.values, ["caf?", "abc"]);
        assert_eq!(got.sanitized_cells, 1);
    }

    #[test]
    fn errors() {
        let f = file("a,b\nc\n");
        assert!(matches!(
            read_column(&src(&f, ColumnSelector::Index(0), false)),
            Err(Error::MalformedCsv { line: 2, .. })
        ));
        let f = file("a,b\n");
        assert!(matches!(read_column(&src(&f, ColumnSelector::Index(5), false)), Err(Error::ColumnNotFound(_))));
        assert!(matches!(
            read_column(&src(&f, ColumnSelector::Name("zip".into()), true)),
            Err(Error::ColumnNotFound(_))
        ));
        let missing = ColumnSource {
            path: "/definitely/not/here.csv".into(),
            column: ColumnSelector::Index(0),
            header: false,
            max_rows: None,
        };
        assert!(matches!(read_column(&missing), Err(Error::FileNotFound(_))));
    }

    #[test]
    fn selector_parse() {
        assert_eq!(ColumnSelector::parse("3"), ColumnSelector::Index(3));
        assert_eq!(ColumnSelector::parse("zip"), ColumnSelector::Name("zip".into()));
    }
}
