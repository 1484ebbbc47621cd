//! Text header plus little-endian raw data file.
//!
//! ```text
//! NDims = 2
//! DimSize = 64 48
//! ElementSpacing = 1 1.5
//! ElementType = uint8
//! ElementDataFile = image.raw
//! ```

use std::path::{Path, PathBuf};

use amdreg::grid::Grid;
use amdreg::image::{BinaryMask, FuzzyImage, WeightMap};
use amdreg::{Error, Result};

use super::{key_values, parse_list, parse_one, read_text, write_text};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementType {
    U8,
    U16,
    F32,
}

impl ElementType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uint8" => Some(Self::U8),
            "uint16" => Some(Self::U16),
            "float32" => Some(Self::F32),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::U8 => "uint8",
            Self::U16 => "uint16",
            Self::F32 => "float32",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::U16 => 2,
            Self::F32 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeHeader {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub element: ElementType,
    /// Relative to the header's directory.
    pub data_file: PathBuf,
}

impl VolumeHeader {
    pub fn ndims(&self) -> usize {
        self.dims.len()
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn format(&self) -> String {
        let join = |v: Vec<String>| v.join(" ");
        format!(
            "NDims = {}\nDimSize = {}\nElementSpacing = {}\nElementType = {}\nElementDataFile = {}\n",
            self.ndims(),
            join(self.dims.iter().map(|d| d.to_string()).collect()),
            join(self.spacing.iter().map(|s| s.to_string()).collect()),
            self.element.name(),
            self.data_file.display()
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut ndims, mut dims, mut spacing, mut element, mut file) = (None, None, None, None, None);
        let mut last = 0;
        for kv in key_values(text) {
            let (line, k, v) = kv?;
            last = line;
            match k {
                "NDims" => ndims = Some(parse_one::<usize>(line, k, v)?),
                "DimSize" => dims = Some((line, parse_list::<usize>(line, k, v)?)),
                "ElementSpacing" => spacing = Some((line, parse_list::<f64>(line, k, v)?)),
                "ElementType" => {
                    element = Some(
                        ElementType::parse(v)
                            .ok_or_else(|| Error::parse(line, format!("unknown ElementType `{v}`")))?,
                    )
                }
                "ElementDataFile" => file = Some(PathBuf::from(v)),
                _ => return Err(Error::parse(line, format!("unknown key `{k}`"))),
            }
        }
        let missing = |k: &str| Error::parse(last, format!("missing key `{k}`"));
        let ndims = ndims.ok_or_else(|| missing("NDims"))?;
        if !(2..=3).contains(&ndims) {
            return Err(Error::parse(last, format!("NDims must be 2 or 3, got {ndims}")));
        }
        let (dl, dims) = dims.ok_or_else(|| missing("DimSize"))?;
        if dims.len() != ndims {
            return Err(Error::parse(dl, format!("DimSize has {} entries, NDims is {ndims}", dims.len())));
        }
        let spacing = match spacing {
            Some((sl, s)) if s.len() != ndims => {
                return Err(Error::parse(sl, format!("ElementSpacing has {} entries, NDims is {ndims}", s.len())))
            }
            Some((_, s)) => s,
            None => vec![1.0; ndims],
        };
        Ok(Self {
            dims,
            spacing,
            element: element.ok_or_else(|| missing("ElementType"))?,
            data_file: file.ok_or_else(|| missing("ElementDataFile"))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VolumeData {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl VolumeData {
    pub fn len(&self) -> usize {
        match self {
            Self::U8(v) => v.len(),
            Self::U16(v) => v.len(),
            Self::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element(&self) -> ElementType {
        match self {
            Self::U8(_) => ElementType::U8,
            Self::U16(_) => ElementType::U16,
            Self::F32(_) => ElementType::F32,
        }
    }

    /// Raw values as `f64` without rescaling.
    pub fn raw(&self) -> Vec<f64> {
        match self {
            Self::U8(v) => v.iter().map(|&x| x as f64).collect(),
            Self::U16(v) => v.iter().map(|&x| x as f64).collect(),
            Self::F32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    /// Values divided by the type maximum; floats are taken as they are.
    pub fn memberships(&self) -> Vec<f64> {
        match self {
            Self::U8(v) => v.iter().map(|&x| x as f64 / u8::MAX as f64).collect(),
            Self::U16(v) => v.iter().map(|&x| x as f64 / u16::MAX as f64).collect(),
            Self::F32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        match self {
            Self::U8(v) => v.clone(),
            Self::U16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Self::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }

    fn from_bytes(element: ElementType, bytes: &[u8]) -> Self {
        match element {
            ElementType::U8 => Self::U8(bytes.to_vec()),
            ElementType::U16 => Self::U16(bytes.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect()),
            ElementType::F32 => {
                Self::F32(bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Volume<const D: usize> {
    pub grid: Grid<D>,
    pub data: VolumeData,
}

impl<const D: usize> Volume<D> {
    pub fn to_image(&self) -> FuzzyImage<D> {
        FuzzyImage::new(self.grid, self.data.memberships()).expect("sizes checked on read")
    }

    /// Non-zero voxels, or voxels equal to `label` when given.
    pub fn to_mask(&self, label: Option<f64>) -> BinaryMask<D> {
        let raw = self.data.raw();
        BinaryMask::from_index_fn(self.grid, |i| match label {
            Some(l) => raw[i] == l,
            None => raw[i] != 0.0,
        })
    }

    pub fn to_weights(&self) -> Result<WeightMap<D>> {
        WeightMap::new(self.grid, self.data.memberships())
    }
}

pub fn read_header(path: &Path) -> Result<VolumeHeader> {
    VolumeHeader::parse(&read_text(path)?)
}

fn data_path(header_path: &Path, header: &VolumeHeader) -> PathBuf {
    header_path.parent().unwrap_or(Path::new("")).join(&header.data_file)
}

pub fn read_volume<const D: usize>(path: &Path) -> Result<Volume<D>> {
    let header = read_header(path)?;
    if header.ndims() != D {
        return Err(Error::DimensionMismatch(format!(
            "{} is {}-D, expected {D}-D",
            path.display(),
            header.ndims()
        )));
    }
    let raw_path = data_path(path, &header);
    let bytes = std::fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let expected = header.voxel_count() * header.element.size();
    if bytes.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{}: {} bytes, header declares {expected}",
            raw_path.display(),
            bytes.len()
        )));
    }
    let grid = Grid::new(
        header.dims.clone().try_into().expect("length checked"),
        header.spacing.clone().try_into().expect("length checked"),
    )?;
    Ok(Volume {
        grid,
        data: VolumeData::from_bytes(header.element, &bytes),
    })
}

/// Writes `path` and a sibling `.raw` file with the same stem.
pub fn write_volume<const D: usize>(path: &Path, grid: &Grid<D>, data: &VolumeData) -> Result<()> {
    if data.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!("{} values for {} voxels", data.len(), grid.len())));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("volume");
    let header = VolumeHeader {
        dims: grid.dims().to_vec(),
        spacing: grid.spacing().to_vec(),
        element: data.element(),
        data_file: PathBuf::from(format!("{stem}.raw")),
    };
    let raw_path = data_path(path, &header);
    std::fs::write(&raw_path, data.to_bytes()).map_err(|e| Error::io(&raw_path, e))?;
    write_text(path, &header.format())
}
