//! Measure CSV files (`x,y,w`).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::measure::DiscreteMeasure;

pub fn read_measure<R: Read>(reader: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["x", "y", "w"] {
        return Err(Error::Parse {
            row: 0,
            msg: format!("expected header `x,y,w`, found `{}`", names.join(",")),
        });
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        let field = |k: usize| -> Result<f64> {
            let s = rec.get(k).ok_or_else(|| Error::Parse {
                row,
                msg: "missing field".into(),
            })?;
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("`{s}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    msg: format!("non-finite value `{s}`"),
                });
            }
            Ok(v)
        };
        let (x, y, w) = (field(0)?, field(1)?, field(2)?);
        if w <= 0.0 {
            return Err(Error::Parse {
                row,
                msg: format!("weight {w} is not positive"),
            });
        }
        points.push(Point2::new(x, y));
        weights.push(w);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            row: 0,
            msg: "no data rows".into(),
        });
    }
    DiscreteMeasure::new(points, weights)
}

pub fn write_measure<W: Write>(mu: &DiscreteMeasure, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "y", "w"])?;
    for (p, w) in mu.points().iter().zip(mu.weights()) {
        // Display for f64 is the shortest decimal string that round-trips
        wtr.write_record([p.x.to_string(), p.y.to_string(), w.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    read_measure(std::fs::File::open(path)?)
}

pub fn save_measure(mu: &DiscreteMeasure, path: &Path) -> Result<()> {
    write_measure(mu, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn row_numbered_errors() {
        let bad = "x,y,w\n0,0,1\n1,NaN,1\n";
        match read_measure(bad.as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        let neg = "x,y,w\n0,0,1\n1,0,1\n2,0,-1\n";
        assert!(matches!(read_measure(neg.as_bytes()), Err(Error::Parse { row: 3, .. })));
        let inf = "x,y,w\ninf,0,1\n";
        assert!(matches!(read_measure(inf.as_bytes()), Err(Error::Parse { row: 1, .. })));
        assert!(matches!(read_measure("a,b,c\n1,2,3\n".as_bytes()), Err(Error::Parse { row: 0, .. })));
        assert!(read_measure("x,y,w\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(pts in prop::collection::vec((-1e6..1e6f64, -1e-6..1e-6f64, 1e-9..1e3f64), 1..50)) {
            let mu = DiscreteMeasure::new(
                pts.iter().map(|&(x, y, _)| Point2::new(x, y)).collect(),
                pts.iter().map(|&(_, _, w)| w).collect(),
            ).unwrap();
            let mut buf = Vec::new();
            write_measure(&mu, &mut buf).unwrap();
            let back = read_measure(buf.as_slice()).unwrap();
            for (a, b) in mu.points().iter().zip(back.points()) {
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
            }
            for (a, b) in mu.weights().iter().zip(back.weights()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
