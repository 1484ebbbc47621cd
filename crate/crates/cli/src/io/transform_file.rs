//! `key = value` transform files with keys `dim`, `matrix` (row-major),
//! `translation` and `center`. Numbers carry 17 significant digits so
//! values survive a write/read round trip unchanged.

use std::path::Path;

use amdreg::linalg::Mat;
use amdreg::transform::{AffineTransform, TransformModel};
use amdreg::{Error, Result};

use super::{key_values, parse_list, parse_one, read_text, write_text};

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn format_transform<const D: usize, M: TransformModel<D>>(t: &M) -> String {
    let a = t.matrix();
    format!(
        "dim = {D}\nmatrix = {}\ntranslation = {}\ncenter = {}\n",
        join(a.iter().flatten().copied()),
        join(t.translation()),
        join(t.center())
    )
}

pub fn parse_transform<const D: usize>(text: &str) -> Result<AffineTransform<D>> {
    let (mut dim, mut matrix, mut translation, mut center) = (None, None, None, None);
    let mut last = 0;
    for kv in key_values(text) {
        let (line, k, v) = kv?;
        last = line;
        let expect = |n: usize, vals: Vec<f64>| {
            if vals.len() == n {
                Ok(vals)
            } else {
                Err(Error::parse(line, format!("{k} needs {n} values, got {}", vals.len())))
            }
        };
        match k {
            "dim" => {
                let d: usize = parse_one(line, k, v)?;
                if d != D {
                    return Err(Error::parse(line, format!("transform is {d}-D, expected {D}-D")));
                }
                dim = Some(d);
            }
            "matrix" => matrix = Some(expect(D * D, parse_list(line, k, v)?)?),
            "translation" => translation = Some(expect(D, parse_list(line, k, v)?)?),
            "center" => center = Some(expect(D, parse_list(line, k, v)?)?),
            _ => return Err(Error::parse(line, format!("unknown key `{k}`"))),
        }
    }
    let missing = |k: &str| Error::parse(last, format!("missing key `{k}`"));
    dim.ok_or_else(|| missing("dim"))?;
    let m = matrix.ok_or_else(|| missing("matrix"))?;
    let mut a: Mat<D> = [[0.0; D]; D];
    for (i, row) in a.iter_mut().enumerate() {
        row.copy_from_slice(&m[i * D..(i + 1) * D]);
    }
    let t = translation.ok_or_else(|| missing("translation"))?;
    let c = center.unwrap_or_else(|| vec![0.0; D]);
    Ok(AffineTransform::new(
        a,
        t.try_into().expect("length checked"),
        c.try_into().expect("length checked"),
    ))
}

pub fn read_transform<const D: usize>(path: &Path) -> Result<AffineTransform<D>> {
    parse_transform(&read_text(path)?)
}

pub fn write_transform<const D: usize, M: TransformModel<D>>(path: &Path, t: &M) -> Result<()> {
    write_text(path, &format_transform(t))
}
