//! C interface to the `tdacnn` pipeline.
//!
//! Every object crosses the boundary as an opaque handle that the caller
//! releases with the matching `*_free` function. Fallible functions return a
//! [`TdaStatus`] and write their result through an out-pointer; on failure a
//! description is available from [`tda_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use tdacnn::homology::PersistenceDiagram;
use tdacnn::ingest::GrayscaleImage;
use tdacnn::io::read_to_string;
use tdacnn::nn::{read_checkpoint, InputDims, Model};
use tdacnn::persistence_image::MultiChannelPI;
use tdacnn::pipeline::{diagrams_to_pi, image_diagrams, image_tensor, pi_tensor, PipelineConfig};
use tdacnn::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    NonFinite = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

/// Pipeline configuration.
pub struct TdaConfig(PipelineConfig);

/// Grayscale image with intensities in `[0, 1]`.
pub struct TdaImage(GrayscaleImage);

/// Dimension-0 and dimension-1 persistence diagrams of one image.
pub struct TdaDiagrams {
    h0: PersistenceDiagram,
    h1: PersistenceDiagram,
}

/// Three-channel persistence image.
pub struct TdaPersistenceImage(MultiChannelPI);

/// Trained classifier together with the configuration it was built from.
pub struct TdaModel {
    model: Model,
    config: PipelineConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> TdaStatus {
    match err {
        Error::InvalidConfig(_) => TdaStatus::InvalidConfig,
        Error::NonFiniteValue(_) => TdaStatus::NonFinite,
        Error::Io { .. } => TdaStatus::Io,
        Error::Parse(_) => TdaStatus::Parse,
        _ => TdaStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `body`, records any failure and converts it to a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TdaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            TdaStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            TdaStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TdaStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn c_str(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Error::Parse(format!("{what} is not valid UTF-8")).into())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or NULL after a
/// success. The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn tda_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn tda_config_default(out: *mut *mut TdaConfig) -> TdaStatus {
    guard(|| {
        *out_ref(out, "out")? = boxed(TdaConfig(PipelineConfig::default()));
        Ok(())
    })
}

/// Configuration parsed from a JSON document; omitted fields take defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_config_from_json(
    json: *const c_char,
    out: *mut *mut TdaConfig,
) -> TdaStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let cfg = PipelineConfig::from_json(&c_str(json, "json")?)?;
        *out = boxed(TdaConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tda_config_free(cfg: *mut TdaConfig) {
    free(cfg)
}

/// Image from `height * width` row-major intensities in `[0, 1]`.
///
/// # Safety
/// `pixels` must point to `height * width` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn tda_image_new(
    height: usize,
    width: usize,
    pixels: *const f64,
    out: *mut *mut TdaImage,
) -> TdaStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if pixels.is_null() {
            return Err(Failure::Null("pixels"));
        }
        let len = height
            .checked_mul(width)
            .ok_or(Error::InvalidSize(usize::MAX))?;
        let data = std::slice::from_raw_parts(pixels, len).to_vec();
        *out = boxed(TdaImage(GrayscaleImage::new(height, width, data)?));
        Ok(())
    })
}

/// Image read from a PGM (P2/P5) or `IMG v1` text file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_image_load(path: *const c_char, out: *mut *mut TdaImage) -> TdaStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let path = PathBuf::from(c_str(path, "path")?);
        *out = boxed(TdaImage(GrayscaleImage::load(&path)?));
        Ok(())
    })
}

/// # Safety
/// `image` must be a live handle; `height` and `width` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tda_image_size(
    image: *const TdaImage,
    height: *mut usize,
    width: *mut usize,
) -> TdaStatus {
    guard(|| {
        let img = &borrow(image, "image")?.0;
        *out_ref(height, "height")? = img.height();
        *out_ref(width, "width")? = img.width();
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tda_image_free(image: *mut TdaImage) {
    free(image)
}

/// Persistence diagrams of an image under the given configuration.
///
/// # Safety
/// `cfg` and `image` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_diagrams_compute(
    cfg: *const TdaConfig,
    image: *const TdaImage,
    out: *mut *mut TdaDiagrams,
) -> TdaStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let img = &borrow(image, "image")?.0;
        let out = out_ref(out, "out")?;
        cfg.validate()?;
        let (h0, h1) = image_diagrams(img, &cfg.ingest, &cfg.rips, cfg.seed)?;
        *out = boxed(TdaDiagrams { h0, h1 });
        Ok(())
    })
}

fn diagram(d: &TdaDiagrams, dim: u32) -> Result<&PersistenceDiagram, Failure> {
    match dim {
        0 => Ok(&d.h0),
        1 => Ok(&d.h1),
        _ => Err(Error::InvalidConfig(format!("homology dimension {dim} is not 0 or 1")).into()),
    }
}

/// Number of points in the diagram of dimension `dim` (0 or 1).
///
/// # Safety
/// `diagrams` must be a live handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_diagrams_len(
    diagrams: *const TdaDiagrams,
    dim: u32,
    len: *mut usize,
) -> TdaStatus {
    guard(|| {
        let pd = diagram(borrow(diagrams, "diagrams")?, dim)?;
        *out_ref(len, "len")? = pd.points.len();
        Ok(())
    })
}

/// Birth and death of point `index`. Essential classes have an infinite
/// death in dimension 0 and a death equal to the filtration cap in dimension 1.
///
/// # Safety
/// `diagrams` must be a live handle; `birth` and `death` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tda_diagrams_point(
    diagrams: *const TdaDiagrams,
    dim: u32,
    index: usize,
    birth: *mut f64,
    death: *mut f64,
) -> TdaStatus {
    guard(|| {
        let pd = diagram(borrow(diagrams, "diagrams")?, dim)?;
        let p = pd.points.get(index).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "index {index} out of range for {} points",
                pd.points.len()
            ))
        })?;
        *out_ref(birth, "birth")? = p.birth;
        *out_ref(death, "death")? = p.death;
        Ok(())
    })
}

/// # Safety
/// `diagrams` must be NULL or a handle returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tda_diagrams_free(diagrams: *mut TdaDiagrams) {
    free(diagrams)
}

/// Three-channel persistence image of a pair of diagrams.
///
/// # Safety
/// `cfg` and `diagrams` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_pi_compute(
    cfg: *const TdaConfig,
    diagrams: *const TdaDiagrams,
    out: *mut *mut TdaPersistenceImage,
) -> TdaStatus {
    guard(|| {
        let cfg = &borrow(cfg, "cfg")?.0;
        let d = borrow(diagrams, "diagrams")?;
        let out = out_ref(out, "out")?;
        cfg.bp.validate()?;
        cfg.pi.validate()?;
        *out = boxed(TdaPersistenceImage(diagrams_to_pi(
            &d.h0, &d.h1, &cfg.bp, &cfg.pi,
        )));
        Ok(())
    })
}

/// Height, width and channel count of a persistence image.
///
/// # Safety
/// `pi` must be a live handle; the size pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tda_pi_shape(
    pi: *const TdaPersistenceImage,
    height: *mut usize,
    width: *mut usize,
    channels: *mut usize,
) -> TdaStatus {
    guard(|| {
        let pi = &borrow(pi, "pi")?.0;
        *out_ref(height, "height")? = pi.height();
        *out_ref(width, "width")? = pi.width();
        *out_ref(channels, "channels")? = pi.planes().len();
        Ok(())
    })
}

/// Copies the values channel-major (channel, row, column) into `buf`, which
/// must hold exactly `height * width * channels` doubles.
///
/// # Safety
/// `pi` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tda_pi_copy(
    pi: *const TdaPersistenceImage,
    buf: *mut f64,
    len: usize,
) -> TdaStatus {
    guard(|| {
        let pi = &borrow(pi, "pi")?.0;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        let need = pi.height() * pi.width() * pi.planes().len();
        if len != need {
            return Err(
                Error::SizeMismatch(format!("buffer holds {len} values, need {need}")).into(),
            );
        }
        let dst = std::slice::from_raw_parts_mut(buf, len);
        for (chunk, plane) in dst
            .chunks_exact_mut(pi.height() * pi.width())
            .zip(pi.planes())
        {
            chunk.copy_from_slice(plane.values());
        }
        Ok(())
    })
}

/// # Safety
/// `pi` must be NULL or a handle returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tda_pi_free(pi: *mut TdaPersistenceImage) {
    free(pi)
}

/// Classifier for `image_height x image_width` inputs with weights read from
/// a checkpoint file. The architecture comes from the configuration.
///
/// # Safety
/// `cfg` must be a live handle, `checkpoint_path` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_model_load(
    cfg: *const TdaConfig,
    checkpoint_path: *const c_char,
    image_height: usize,
    image_width: usize,
    out: *mut *mut TdaModel,
) -> TdaStatus {
    guard(|| {
        let config = borrow(cfg, "cfg")?.0.clone();
        let path = PathBuf::from(c_str(checkpoint_path, "checkpoint_path")?);
        let out = out_ref(out, "out")?;
        config.validate()?;
        let dims = InputDims {
            image_height,
            image_width,
            pi_resolution: config.pi.resolution,
        };
        let mut model = Model::new(&config.model, dims)?;
        model.load_params(read_checkpoint(&read_to_string(&path)?)?)?;
        *out = boxed(TdaModel { model, config });
        Ok(())
    })
}

/// Predicted class of an image. Persistence is computed internally when the
/// model uses the topological branch.
///
/// # Safety
/// `model` and `image` must be live handles and `class_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tda_model_predict(
    model: *const TdaModel,
    image: *const TdaImage,
    class_out: *mut usize,
) -> TdaStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let img = &borrow(image, "image")?.0;
        let class_out = out_ref(class_out, "class_out")?;
        let cfg = &m.config;
        let pi = if cfg.model.use_pi {
            let (h0, h1) = image_diagrams(img, &cfg.ingest, &cfg.rips, cfg.seed)?;
            Some(pi_tensor(&diagrams_to_pi(&h0, &h1, &cfg.bp, &cfg.pi)))
        } else {
            None
        };
        *class_out = m.model.predict(&image_tensor(img), pi.as_ref())?;
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn tda_model_free(model: *mut TdaModel) {
    free(model)
}
