use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Metric, MetricMeasureSpace, PointLabel};
use crate::error::{Error, Result};

/// On-disk description of a space.
///
/// Either `coords` (with `metric` one of `euclidean`, `manhattan`,
/// `chebyshev`) or `dist` (with `metric` absent or `matrix`) must be given.
/// Missing `weights` means counting measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub points: Vec<PointLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

fn parse_metric(name: &str) -> Result<Option<Metric>> {
    Ok(match name {
        "euclidean" => Some(Metric::Euclidean),
        "manhattan" => Some(Metric::Manhattan),
        "chebyshev" => Some(Metric::Chebyshev),
        "matrix" => None,
        other => return Err(Error::Format(format!("unknown metric {other:?}"))),
    })
}

impl SpaceFile {
    pub fn into_space(self) -> Result<MetricMeasureSpace> {
        let n = self.points.len();
        let weights = self.weights.unwrap_or_else(|| vec![1.0; n]);
        let metric = match self.metric.as_deref() {
            Some(name) => parse_metric(name)?,
            None if self.coords.is_some() => Some(Metric::Euclidean),
            None => None,
        };
        match (self.coords, self.dist, metric) {
            (_, Some(dist), None) => MetricMeasureSpace::from_matrix(self.points, dist, weights),
            (Some(coords), None, Some(metric)) => MetricMeasureSpace::from_coords(self.points, coords, metric, weights),
            (Some(_), Some(_), Some(_)) => Err(Error::Format(
                "give either coords with a metric or a distance matrix, not both".into(),
            )),
            _ => Err(Error::Format("space needs coords or a distance matrix".into())),
        }
    }

    pub fn from_space(space: &MetricMeasureSpace) -> Self {
        let (coords, metric, dist) = match (space.coords(), space.metric()) {
            (Some(c), Some(m)) => {
                let name = serde_json::to_value(m).expect("metric serializes");
                (Some(c.to_vec()), name.as_str().map(str::to_owned), None)
            }
            _ => {
                let n = space.len();
                let dist = (0..n).map(|i| (0..n).map(|j| space.dist(i, j)).collect()).collect();
                (None, Some("matrix".to_owned()), Some(dist))
            }
        };
        SpaceFile {
            points: space.labels().to_vec(),
            coords,
            metric,
            dist,
            weights: Some(space.weights().to_vec()),
        }
    }
}

impl MetricMeasureSpace {
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let file: SpaceFile = serde_json::from_reader(reader).map_err(|e| Error::Format(e.to_string()))?;
        file.into_space()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn to_writer(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, &SpaceFile::from_space(self))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.to_writer(&mut w)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Map from printed label to point index.
    pub fn label_index(&self) -> HashMap<String, usize> {
        self.labels()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.to_string(), i))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct FunctionRow {
    point: String,
    value: f64,
}

/// Read a `point,value` CSV into a function indexed like `space`. Every
/// point must appear exactly once.
pub fn read_function_csv(space: &MetricMeasureSpace, reader: impl Read) -> Result<Vec<f64>> {
    let index = space.label_index();
    let mut u = vec![f64::NAN; space.len()];
    let mut seen = vec![false; space.len()];
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: FunctionRow = row.map_err(|e| Error::Format(e.to_string()))?;
        let &i = index
            .get(&row.point)
            .ok_or_else(|| Error::Format(format!("unknown point {:?}", row.point)))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Format(format!("point {:?} listed twice", row.point)));
        }
        if !row.value.is_finite() {
            return Err(Error::Format(format!("non-finite value at point {:?}", row.point)));
        }
        u[i] = row.value;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Format(format!("no value for point {}", space.labels()[i])));
    }
    Ok(u)
}

pub fn write_function_csv(space: &MetricMeasureSpace, u: &[f64], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (label, &value) in space.labels().iter().zip(u) {
        w.serialize(FunctionRow {
            point: label.to_string(),
            value,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One row per `(x, r)`: ball size and measure.
pub fn write_ball_table(space: &MetricMeasureSpace, radii: &[f64], closed: bool, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "r", "closed", "size", "measure"])?;
    for x in 0..space.len() {
        for &r in radii {
            w.write_record([
                space.labels()[x].to_string(),
                r.to_string(),
                closed.to_string(),
                space.ball_len(x, r, closed).max(1).to_string(),
                space.ball_measure(x, r, closed).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"points":[0,1,"c"],"coords":[[0,0],[3,4],[0,1]],"metric":"euclidean","weights":[1,2,1]}"#;
        let s = MetricMeasureSpace::from_reader(text.as_bytes()).unwrap();
        assert_eq!(s.dist(0, 1), 5.0);
        assert_eq!(s.labels()[2], PointLabel::Str("c".into()));
        let mut buf = Vec::new();
        s.to_writer(&mut buf).unwrap();
        let back = MetricMeasureSpace::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back.weights(), s.weights());
        assert_eq!(back.dist(1, 2), s.dist(1, 2));

        let m = r#"{"points":[0,1],"metric":"matrix","dist":[[0,2],[2,0]]}"#;
        let s = MetricMeasureSpace::from_reader(m.as_bytes()).unwrap();
        assert_eq!(s.diam(), 2.0);
        assert_eq!(s.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn malformed_files() {
        for bad in [
            r#"{"points":[0,1]}"#,
            r#"{"points":[0,1],"coords":[[0],[1]],"metric":"taxicab"}"#,
            r#"{"points":[0,1],"dist":[[0,1],[1,0]],"weights":[1,-1]}"#,
            r#"not json"#,
        ] {
            assert!(MetricMeasureSpace::from_reader(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn function_csv_round_trip() {
        let s = MetricMeasureSpace::from_matrix_unit(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_function_csv(&s, &[0.25, -3.0], &mut buf).unwrap();
        assert_eq!(read_function_csv(&s, buf.as_slice()).unwrap(), vec![0.25, -3.0]);
        assert!(read_function_csv(&s, "point,value\n0,1\n".as_bytes()).is_err());
        assert!(read_function_csv(&s, "point,value\n0,1\n1,2\n7,3\n".as_bytes()).is_err());
    }
}
