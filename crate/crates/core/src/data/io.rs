//! Plain-text ratings files: one `user,item,rating` triple per line, `#`
//! comments ignored.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::matrix::{IdMap, RatingBounds, RatingTriple, RatingsMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Column order of a ratings file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    #[default]
    UserItemRating,
    ItemUserRating,
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).flexible(true).trim(csv::Trim::All).from_reader(reader)
}

/// Parses a ratings stream. Dense indices follow first appearance.
pub fn parse_ratings<F: Scalar, R: Read>(reader: R, schema: Schema, bounds: RatingBounds<F>) -> Result<RatingsMatrix<F>> {
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    for record in csv_reader(reader).records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", record.len()) });
        }
        let (user, item) = match schema {
            Schema::UserItemRating => (&record[0], &record[1]),
            Schema::ItemUserRating => (&record[1], &record[0]),
        };
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse { line, message: "empty id".into() });
        }
        let rating: F =
            record[2].parse().map_err(|_| Error::Parse { line, message: format!("rating `{}` is not a number", &record[2]) })?;
        if !bounds.contains(rating) {
            return Err(Error::OutOfRange {
                line,
                rating: rating.to_f64_lossy(),
                min: bounds.min.to_f64_lossy(),
                max: bounds.max.to_f64_lossy(),
            });
        }
        let u = users.get_or_insert(user);
        let i = items.get_or_insert(item);
        if !seen.insert((u, i)) {
            return Err(Error::DuplicateEntry { line, user: user.to_string(), item: item.to_string() });
        }
        triples.push(RatingTriple { user: u, item: i, rating });
    }
    RatingsMatrix::with_ids(users, items, triples, bounds)
}

pub fn parse_ratings_str<F: Scalar>(text: &str, bounds: RatingBounds<F>) -> Result<RatingsMatrix<F>> {
    parse_ratings(text.as_bytes(), Schema::UserItemRating, bounds)
}

pub fn read_ratings_file<F: Scalar>(path: &std::path::Path, bounds: RatingBounds<F>) -> Result<RatingsMatrix<F>> {
    let file = std::fs::File::open(path)?;
    parse_ratings(std::io::BufReader::new(file), Schema::UserItemRating, bounds)
}

/// Writes entries in user-major order using their external ids.
pub fn write_ratings<F: Scalar, W: Write>(writer: W, m: &RatingsMatrix<F>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for t in m.triples() {
        w.write_record([m.user_ids().id(t.user), m.item_ids().id(t.item), &t.rating.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ratings_file<F: Scalar>(path: &std::path::Path, m: &RatingsMatrix<F>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_ratings(std::io::BufWriter::new(file), m)
}

/// Reads `user,item` query lines.
pub fn parse_pairs<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for record in csv_reader(reader).records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse { line, message: format!("expected `user,item`, found {} fields", record.len()) });
        }
        out.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RatingsMatrix<f64>> {
        parse_ratings_str(s, RatingBounds::default())
    }

    #[test]
    fn parses_small_stream() {
        let m = parse("u1,i1,4.0\nu1,i2,3.0\nu2,i1,5.0").unwrap();
        assert_eq!((m.n_users(), m.n_items(), m.nnz()), (2, 2, 3));
        assert_eq!(m.user_ids().get("u2"), Some(1));
        assert_eq!(m.item_ids().get("i2"), Some(1));
    }

    #[test]
    fn empty_stream_is_empty_matrix() {
        let m = parse("").unwrap();
        assert_eq!((m.n_users(), m.n_items(), m.nnz()), (0, 0, 0));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let m = parse("# header\nu1,i1,4\n\n# trailing\nu2,i2,1\n").unwrap();
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        assert!(matches!(parse("u1,i1,4.0\nu1,i1,2.0"), Err(Error::DuplicateEntry { line: 2, .. })));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("u1,i1,4.0\nu2,i2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("u1,i1,abc"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn out_of_range_rating() {
        assert!(matches!(parse("u1,i1,0.5"), Err(Error::OutOfRange { line: 1, .. })));
        let binary = parse_ratings_str::<f64>("u1,i1,0\nu1,i2,1", RatingBounds::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(binary.nnz(), 2);
    }

    #[test]
    fn item_user_schema_swaps_columns() {
        let m: RatingsMatrix<f64> = parse_ratings("i1,u1,4\ni1,u2,2".as_bytes(), Schema::ItemUserRating, RatingBounds::default()).unwrap();
        assert_eq!((m.n_users(), m.n_items()), (2, 1));
    }

    #[test]
    fn pairs_file() {
        let p = parse_pairs("a,b\n# c\nc,d\n".as_bytes()).unwrap();
        assert_eq!(p, vec![("a".into(), "b".into()), ("c".into(), "d".into())]);
        assert!(parse_pairs("".as_bytes()).unwrap().is_empty());
    }
}
