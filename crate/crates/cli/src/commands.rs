use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use amdreg::evaluation::{
    ame_outer_sets, average_error, average_minimal_error, inverse_consistency_error, jaccard, ring_phantom,
    run_synthetic_experiment, smooth_phantom, ModelKind, SyntheticConfig,
};
use amdreg::grid::Grid;
use amdreg::image::add_gaussian_noise;
use amdreg::registration::{register, Measure, RegistrationConfig, RegistrationImage, RegistrationResult};
use amdreg::transform::{AffineTransform, RigidTransform, TransformClass, TransformModel};
use amdreg::{Error, Result};

use crate::io::{
    read_config, read_header, read_landmarks, read_transform, read_volume, trace_csv, write_transform, write_volume,
    FileConfig, VolumeData,
};

#[derive(Parser, Debug)]
#[command(name = "amdreg", version, about = "Rigid and affine image registration with alpha-cut distances")]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Register a floating volume to a reference volume.
    Register(RegisterArgs),
    /// Recover random transforms of a volume under noise and report the errors.
    Synth(SynthArgs),
    /// Evaluate landmarks, inverse consistency or label overlap.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Convert between PNG and volume files.
    Convert(ConvertArgs),
    /// Write a synthetic test volume.
    Phantom(PhantomArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureArg {
    AlphaAmd,
    Ssd,
    Pcc,
    Mi,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::AlphaAmd => Measure::AlphaAmd,
            MeasureArg::Ssd => Measure::Ssd,
            MeasureArg::Pcc => Measure::Pcc,
            MeasureArg::Mi => Measure::Mi,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Rigid,
    Affine,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Rigid => ModelKind::Rigid,
            ModelArg::Affine => ModelKind::Affine,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassArg {
    Zero,
    Small,
    Medium,
    Large,
}

impl From<ClassArg> for TransformClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Zero => TransformClass::Zero,
            ClassArg::Small => TransformClass::Small,
            ClassArg::Medium => TransformClass::Medium,
            ClassArg::Large => TransformClass::Large,
        }
    }
}

#[derive(Args, Debug)]
struct RegisterArgs {
    /// Reference volume header.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Floating volume header.
    #[arg(long = "flo")]
    floating: PathBuf,
    #[arg(long)]
    ref_mask: Option<PathBuf>,
    #[arg(long)]
    flo_mask: Option<PathBuf>,
    #[arg(long)]
    ref_weights: Option<PathBuf>,
    #[arg(long)]
    flo_weights: Option<PathBuf>,
    /// Starting transform (floating to reference).
    #[arg(long)]
    init_transform: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the estimated transform; printed when omitted.
    #[arg(long)]
    out_transform: Option<PathBuf>,
    #[arg(long)]
    out_trace: Option<PathBuf>,
    #[arg(long, value_enum)]
    measure: Option<MeasureArg>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Base volume header.
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_enum, default_value = "small")]
    class: ClassArg,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Also register with exchanged roles and report SymSR and ICE.
    #[arg(long)]
    symmetric: bool,
    /// Output directory for trials.csv, summary.json and cumulative.csv.
    #[arg(long)]
    out_report: PathBuf,
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// AE and AME between reference landmarks and transformed floating landmarks.
    Landmarks {
        #[arg(long)]
        ref_landmarks: PathBuf,
        #[arg(long)]
        flo_landmarks: PathBuf,
        #[arg(long)]
        transform: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Inverse consistency error over the grid points of a volume.
    Ice {
        #[arg(long)]
        forward: PathBuf,
        #[arg(long)]
        backward: PathBuf,
        /// Volume header whose grid points are used.
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Jaccard index of one label in two label volumes.
    Jaccard {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Label value; any non-zero voxel when omitted.
        #[arg(long)]
        label: Option<f64>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Args, Debug)]
struct ConvertArgs {
    /// A PNG or a 2-D volume header.
    #[arg(long)]
    input: PathBuf,
    /// A volume header or, with a `.png` extension, an 8-bit image.
    #[arg(long)]
    output: PathBuf,
    /// Pixel spacing for PNG input.
    #[arg(long, num_args = 2, default_values_t = [1.0, 1.0])]
    spacing: Vec<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PhantomKind {
    Smooth,
    Ring,
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[arg(long, value_enum, default_value = "smooth")]
    kind: PhantomKind,
    /// Two or three sizes.
    #[arg(long, num_args = 2..=3, default_values_t = [64, 64])]
    size: Vec<usize>,
    #[arg(long, num_args = 2..=3)]
    spacing: Option<Vec<f64>>,
    #[arg(long, default_value_t = 9)]
    folds: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` and runs the command, returning the process exit code:
/// 0 on success, 2 when images do not overlap, 1 for any other failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonOverlap(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Register(a) => match read_header(&a.reference)?.ndims() {
            2 => cmd_register::<2>(&a),
            _ => cmd_register::<3>(&a),
        },
        Command::Synth(a) => match read_header(&a.image)?.ndims() {
            2 => cmd_synth::<2>(&a),
            _ => cmd_synth::<3>(&a),
        },
        Command::Eval(e) => cmd_eval(e),
        Command::Convert(a) => cmd_convert(&a),
        Command::Phantom(a) => match a.size.len() {
            2 => cmd_phantom::<2>(&a),
            _ => cmd_phantom::<3>(&a),
        },
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    path.map_or_else(|| Ok(FileConfig::default()), read_config)
}

fn load_image<const D: usize>(
    image: &Path,
    mask: Option<&PathBuf>,
    weights: Option<&PathBuf>,
) -> Result<RegistrationImage<D>> {
    let mut img = RegistrationImage::new(read_volume::<D>(image)?.to_image());
    if let Some(m) = mask {
        img = img.with_mask(read_volume::<D>(m)?.to_mask(None))?;
    }
    if let Some(w) = weights {
        img = img.with_weights(read_volume::<D>(w)?.to_weights()?)?;
    }
    Ok(img)
}

fn finish<const D: usize, M: TransformModel<D>>(a: &RegisterArgs, r: &RegistrationResult<M>) -> Result<()> {
    match &a.out_transform {
        Some(p) => write_transform(p, &r.transform)?,
        None => print!("{}", crate::io::format_transform(&r.transform)),
    }
    if let Some(p) = &a.out_trace {
        std::fs::write(p, trace_csv(&r.levels)).map_err(|e| Error::io(p, e))?;
    }
    println!("distance = {}", r.distance);
    println!("iterations = {}", r.iterations);
    if let Some(s) = r.stop_reason() {
        println!("stop = {}", serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
    }
    println!("preprocessing_s = {:.6}", r.preprocessing.as_secs_f64());
    println!("mean_iteration_s = {:.3e}", r.mean_iteration_time().as_secs_f64());
    Ok(())
}

fn cmd_register<const D: usize>(a: &RegisterArgs) -> Result<()> {
    let file = load_config(a.config.as_deref())?;
    let mut cfg: RegistrationConfig = file.registration;
    if let Some(m) = a.measure {
        cfg.measure = m.into();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let model = a.model.map(ModelKind::from).or(file.model).unwrap_or_default();
    let reference = load_image::<D>(&a.reference, a.ref_mask.as_ref(), a.ref_weights.as_ref())?;
    let floating = load_image::<D>(&a.floating, a.flo_mask.as_ref(), a.flo_weights.as_ref())?;
    let init = match &a.init_transform {
        Some(p) => read_transform::<D>(p)?,
        None => AffineTransform::identity(floating.image.grid().center()),
    };
    if init.determinant().abs() < 1e-12 {
        return Err(Error::SingularTransform { det: init.determinant() });
    }
    match model {
        ModelKind::Rigid => {
            let t0 = RigidTransform::from_affine(&init)?;
            finish(a, &register(&floating, &reference, &t0, &cfg)?)
        }
        ModelKind::Affine => finish(a, &register(&floating, &reference, &init, &cfg)?),
    }
}

fn cmd_synth<const D: usize>(a: &SynthArgs) -> Result<()> {
    let file = load_config(a.config.as_deref())?;
    let base = read_volume::<D>(&a.image)?.to_image();
    let cfg = SyntheticConfig {
        class: a.class.into(),
        trials: a.trials,
        noise_sigma: a.noise_sigma,
        model: a.model.map(ModelKind::from).or(file.model).unwrap_or_default(),
        registration: file.registration,
        symmetric: a.symmetric,
        seed: a.seed,
        ..Default::default()
    };
    let started = Instant::now();
    let report = run_synthetic_experiment(&base, &cfg)?;
    std::fs::create_dir_all(&a.out_report).map_err(|e| Error::io(&a.out_report, e))?;
    for (name, text) in [
        ("trials.csv", report.trials_csv()),
        ("summary.json", report.summary_json()),
        ("cumulative.csv", report.cumulative_csv()),
    ] {
        let p = a.out_report.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    println!("sr = {}", report.sr);
    if let Some(s) = report.sym_sr {
        println!("sym_sr = {s}");
    }
    if let Some(ae) = report.mean_success_ae {
        println!("mean_success_ae = {ae}");
    }
    if let Some(ice) = report.mean_ice {
        println!("mean_ice = {ice}");
    }
    println!("elapsed_s = {:.2}", started.elapsed().as_secs_f64());
    Ok(())
}

fn print_metrics(csv: bool, metrics: &[(&str, f64)]) {
    if csv {
        println!("{}", metrics.iter().map(|m| m.0).collect::<Vec<_>>().join(","));
        println!("{}", metrics.iter().map(|m| m.1.to_string()).collect::<Vec<_>>().join(","));
    } else {
        for (k, v) in metrics {
            println!("{k} = {v}");
        }
    }
}

fn transform_dim(path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dim = crate::io::key_values(&text)
        .filter_map(|kv| kv.ok())
        .find(|(_, k, _)| *k == "dim")
        .and_then(|(_, _, v)| v.parse().ok());
    dim.ok_or_else(|| Error::parse(0, format!("{}: no `dim` entry", path.display())))
}

fn eval_landmarks<const D: usize>(r: &Path, f: &Path, t: &Path, csv: bool) -> Result<()> {
    let t = read_transform::<D>(t)?;
    let (lr, lf) = (read_landmarks::<D>(r)?, read_landmarks::<D>(f)?);
    let mut out = vec![
        ("ae", average_error(&t, lr.points(), lf.points())?),
        ("ame", average_minimal_error(&t, lr.points(), lf.points())?),
    ];
    if lr.parity().is_some() && lf.parity().is_some() {
        out.push(("ame_outer", ame_outer_sets(&t, &lr, &lf)?));
    }
    print_metrics(csv, &out);
    Ok(())
}

fn eval_ice<const D: usize>(fwd: &Path, bwd: &Path, reference: &Path, stride: usize, csv: bool) -> Result<()> {
    let (tf, tb) = (read_transform::<D>(fwd)?, read_transform::<D>(bwd)?);
    let grid = read_volume::<D>(reference)?.grid;
    let stride = stride.max(1);
    let pts: Vec<[f64; D]> = (0..grid.len())
        .filter(|&i| grid.coords(i).iter().all(|c| c % stride == 0))
        .map(|i| grid.point(i))
        .collect();
    print_metrics(csv, &[("ice", inverse_consistency_error(&tf, &tb, &pts)?)]);
    Ok(())
}

fn eval_jaccard<const D: usize>(a: &Path, b: &Path, label: Option<f64>, csv: bool) -> Result<()> {
    let (va, vb) = (read_volume::<D>(a)?, read_volume::<D>(b)?);
    print_metrics(csv, &[("jaccard", jaccard(&va.to_mask(label), &vb.to_mask(label))?)]);
    Ok(())
}

fn cmd_eval(e: EvalCommand) -> Result<()> {
    match e {
        EvalCommand::Landmarks {
            ref_landmarks,
            flo_landmarks,
            transform,
            csv,
        } => match transform_dim(&transform)? {
            2 => eval_landmarks::<2>(&ref_landmarks, &flo_landmarks, &transform, csv),
            3 => eval_landmarks::<3>(&ref_landmarks, &flo_landmarks, &transform, csv),
            d => Err(Error::InvalidParameter(format!("unsupported dimension {d}"))),
        },
        EvalCommand::Ice {
            forward,
            backward,
            reference,
            stride,
            csv,
        } => match read_header(&reference)?.ndims() {
            2 => eval_ice::<2>(&forward, &backward, &reference, stride, csv),
            _ => eval_ice::<3>(&forward, &backward, &reference, stride, csv),
        },
        EvalCommand::Jaccard { a, b, label, csv } => match read_header(&a)?.ndims() {
            2 => eval_jaccard::<2>(&a, &b, label, csv),
            _ => eval_jaccard::<3>(&a, &b, label, csv),
        },
    }
}

fn is_png(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn cmd_convert(a: &ConvertArgs) -> Result<()> {
    let image_err = |e: image::ImageError| Error::InvalidParameter(format!("{}: {e}", a.input.display()));
    if is_png(&a.input) {
        let img = image::open(&a.input).map_err(image_err)?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let grid = Grid::new([w, h], [a.spacing[0], a.spacing[1]])?;
        let data = match img {
            image::DynamicImage::ImageLuma16(_) | image::DynamicImage::ImageRgb16(_) | image::DynamicImage::ImageRgba16(_) => {
                VolumeData::U16(img.into_luma16().into_raw())
            }
            _ => VolumeData::U8(img.into_luma8().into_raw()),
        };
        write_volume(&a.output, &grid, &data)
    } else if is_png(&a.output) {
        let v = read_volume::<2>(&a.input)?;
        let [w, h] = v.grid.dims();
        let px: Vec<u8> = v.data.memberships().iter().map(|m| (m.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        let buf = image::GrayImage::from_raw(w as u32, h as u32, px).expect("buffer length matches");
        buf.save(&a.output)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", a.output.display())))
    } else {
        Err(Error::InvalidParameter("one of --input or --output must be a .png file".into()))
    }
}

fn cmd_phantom<const D: usize>(a: &PhantomArgs) -> Result<()> {
    let dims: [usize; D] = a.size.clone().try_into().expect("length dispatched");
    let spacing: [f64; D] = match &a.spacing {
        Some(s) => s
            .clone()
            .try_into()
            .map_err(|_| Error::InvalidParameter("--spacing needs one value per axis".into()))?,
        None => [1.0; D],
    };
    let grid = Grid::new(dims, spacing)?;
    let img = match a.kind {
        PhantomKind::Smooth => smooth_phantom(grid),
        PhantomKind::Ring => ring_phantom(grid, a.folds),
    };
    let img = add_gaussian_noise(&img, a.noise_sigma, a.seed)?;
    let data = VolumeData::F32(img.values().iter().map(|&v| v as f32).collect());
    write_volume(&a.out, &grid, &data)
}
