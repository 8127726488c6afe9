use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) enum Column {
    Required(&'static str),
    Optional(&'static str),
}

/// Streams a delimited file, resolving the requested columns by header name.
/// The callback receives the 1-based line number and the selected fields, with
/// absent optional columns passed as empty strings.
pub(crate) fn for_each_row<F>(path: &Path, delimiter: u8, columns: &[Column], mut visit: F) -> Result<()>
where
    F: FnMut(u64, &[&str]) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .comment(Some(b'#'))
        .quoting(delimiter == b',')
        .flexible(true)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let mut indices = Vec::with_capacity(columns.len());
    for column in columns {
        let (name, required) = match column {
            Column::Required(name) => (*name, true),
            Column::Optional(name) => (*name, false),
        };
        let index = headers.iter().position(|h| h == name);
        if index.is_none() && required {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            });
        }
        indices.push(index);
    }

    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| csv_error(path, e))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let mut fields: Vec<&str> = Vec::with_capacity(columns.len());
        for (index, column) in indices.iter().zip(columns) {
            match (index.and_then(|i| record.get(i)), column) {
                (Some(value), _) => fields.push(value.trim()),
                (None, Column::Optional(_)) => fields.push(""),
                (None, Column::Required(name)) => {
                    return Err(Error::format(path, line, format!("row has no `{name}` field")))
                }
            }
        }
        visit(line, &fields)?;
    }
    Ok(())
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::format(path, line, format!("{other:?}")),
    }
}

pub(crate) fn create_writer(path: &Path, delimiter: u8) -> Result<csv::Writer<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().delimiter(delimiter).from_writer(file))
}

/// Comma writer whose file starts with a `# <comment>` line.
pub(crate) fn create_commented_writer(path: &Path, comment: Option<&str>) -> Result<csv::Writer<File>> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    if let Some(c) = comment {
        writeln!(file, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    Ok(csv::WriterBuilder::new().from_writer(file))
}
