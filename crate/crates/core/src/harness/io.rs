//! Dataset files: one CSV row per measured point plus a JSON metadata file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{BadacError, Result};
use crate::model::{ClassId, Dataset, Grid, Instance};
use crate::simulators::Provenance;

pub const DATASET_HEADER: [&str; 6] = ["instance_id", "class_label", "point_index", "x", "y", "sigma"];

/// Writes `instance_id,class_label,point_index,x,y,sigma` rows. Unlabeled
/// instances get an empty label field.
pub fn write_dataset<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(DATASET_HEADER)?;
    for (id, inst) in dataset.instances().iter().enumerate() {
        let label = inst.label().map(|l| l.to_string()).unwrap_or_default();
        for j in 0..inst.len() {
            w.write_record([
                id.to_string(),
                label.clone(),
                j.to_string(),
                inst.grid().points()[j].to_string(),
                inst.values()[j].to_string(),
                inst.sigmas()[j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Pending {
    id: u64,
    label: Option<ClassId>,
    x: Vec<f64>,
    y: Vec<f64>,
    sigma: Vec<f64>,
}

impl Pending {
    fn finish(self, grid: &mut Option<Grid>) -> Result<Instance> {
        let g = match grid {
            Some(g) if g.points().len() == self.x.len() && g.points().iter().zip(&self.x).all(|(a, b)| a.to_bits() == b.to_bits()) => {
                g.clone()
            }
            Some(_) => return Err(BadacError::GridMismatch),
            None => {
                let g = Grid::new(self.x)?;
                *grid = Some(g.clone());
                g
            }
        };
        Instance::new(g, self.y, self.sigma, self.label)
    }
}

/// Reads a dataset written by [`write_dataset`]. Rows of one instance must
/// be contiguous and in point order.
pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header = rdr.headers()?;
    if header.iter().ne(DATASET_HEADER) {
        return Err(BadacError::MissingColumns(format!("expected header {}", DATASET_HEADER.join(","))));
    }
    let mut grid = None;
    let mut instances = Vec::new();
    let mut current: Option<Pending> = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| BadacError::Data(format!("row {}: bad {what}", line + 2));
        let id: u64 = rec[0].parse().map_err(|_| bad("instance_id"))?;
        let label = match &rec[1] {
            "" => None,
            s => Some(s.parse::<ClassId>().map_err(|_| bad("class_label"))?),
        };
        let j: usize = rec[2].parse().map_err(|_| bad("point_index"))?;
        let num = |i: usize, what: &str| rec[i].parse::<f64>().map_err(|_| bad(what));
        let (x, y, s) = (num(3, "x")?, num(4, "y")?, num(5, "sigma")?);

        if current.as_ref().is_some_and(|p| p.id != id) {
            instances.push(current.take().expect("checked").finish(&mut grid)?);
        }
        let p = current.get_or_insert_with(|| Pending {
            id,
            label,
            x: Vec::new(),
            y: Vec::new(),
            sigma: Vec::new(),
        });
        if p.label != label || j != p.x.len() {
            return Err(bad("point order or label"));
        }
        p.x.push(x);
        p.y.push(y);
        p.sigma.push(s);
    }
    if let Some(p) = current {
        instances.push(p.finish(&mut grid)?);
    }
    Dataset::new(instances)
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_dataset(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn save_metadata(provenance: &Provenance, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(provenance)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_metadata(path: &Path) -> Result<Provenance> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
