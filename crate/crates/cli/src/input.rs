//! Reading `y,mu_hat[,weight]` files.

use std::io::Read;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Columns {
    pub y: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub weight: Option<Vec<f64>>,
}

/// Reads from `path`, or from stdin when `path` is `-`.
pub fn read_columns(path: &Path) -> Result<Columns, CliError> {
    let name = path.display().to_string();
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).map_err(|e| CliError::io(path, e))?;
        parse_columns(&buf[..], &name)
    } else {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        parse_columns(file, &name)
    }
}

pub fn parse_columns<R: Read>(reader: R, name: &str) -> Result<Columns, CliError> {
    let malformed = |line: u64, message: String| CliError::Malformed {
        path: name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let find = |col: &str| headers.iter().position(|h| h == col);
    let y_col = find("y").ok_or_else(|| malformed(1, "missing column `y`".into()))?;
    let mu_col = find("mu_hat").ok_or_else(|| malformed(1, "missing column `mu_hat`".into()))?;
    let w_col = find("weight");

    let mut cols = Columns {
        y: Vec::new(),
        mu_hat: Vec::new(),
        weight: w_col.map(|_| Vec::new()),
    };
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize, col: &str| -> Result<f64, CliError> {
            let raw = record.get(idx).unwrap_or("");
            let x: f64 = raw
                .parse()
                .map_err(|_| malformed(line, format!("column `{col}`: cannot parse {raw:?} as a number")))?;
            if !x.is_finite() {
                return Err(malformed(line, format!("column `{col}`: non-finite value {raw:?}")));
            }
            Ok(x)
        };
        cols.y.push(field(y_col, "y")?);
        cols.mu_hat.push(field(mu_col, "mu_hat")?);
        if let (Some(idx), Some(w)) = (w_col, cols.weight.as_mut()) {
            w.push(field(idx, "weight")?);
        }
    }
    if cols.y.is_empty() {
        return Err(malformed(2, "no data rows".into()));
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_weights() {
        let c = parse_columns("y,mu_hat\n1,0.5\n0,0.25\n".as_bytes(), "t").unwrap();
        assert_eq!(c.y, vec![1.0, 0.0]);
        assert_eq!(c.weight, None);
        let c = parse_columns("mu_hat,weight,y\n0.5,2,1\n".as_bytes(), "t").unwrap();
        assert_eq!((c.y[0], c.mu_hat[0], c.weight.unwrap()[0]), (1.0, 0.5, 2.0));
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_columns("y,mu_hat\n1,0.5\n1,NaN\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, CliError::Malformed { line: 3, .. }), "{err}");
        let err = parse_columns("y,mu_hat\n1,0.5\n2,abc\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, CliError::Malformed { line: 3, .. }));
        let err = parse_columns("y,mean\n1,0.5\n".as_bytes(), "t").unwrap_err();
        assert!(err.to_string().contains("mu_hat"));
        let err = parse_columns("y,mu_hat\n1,inf\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, CliError::Malformed { line: 2, .. }));
        assert!(parse_columns("y,mu_hat\n".as_bytes(), "t").is_err());
    }
}
