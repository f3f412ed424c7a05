//! Blind single-channel dereverberation by convolutive non-negative matrix
//! factorization of the power spectrogram, with a sparsity penalty on the clean
//! spectrogram and a smoothness penalty on the per-band reverberation envelope.
//!
//! Also includes the pieces needed to test it: WAV I/O, STFT, image-method room
//! impulse responses and intrusive quality measures.

pub mod audio;
pub mod error;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod reconstruct;
pub mod rir;
pub mod signals;
pub mod solver;
pub mod stft;
pub mod tridiag;

pub use audio::{apply_rir, read_wav, write_wav, AudioSignal, SampleFormat};
pub use error::{Error, Result};
pub use metrics::{cepstral_distance, evaluate, fwssnr, MetricsReport};
pub use model::{cost, cost_terms, forward_model, CostTerms, ReverbKernel, SolverConfig};
pub use pipeline::{dereverberate, DereverbConfig, DereverbOutput, StageTimings};
pub use reconstruct::{reconstruct, ReconstructMethod};
pub use rir::{exp_decay_rir, image_method_rir, schroeder_t60, RoomSpec, WallAbsorption};
pub use solver::{run, SolverState};
pub use stft::{analyze, power, synthesize, ComplexSpectrogram, PowerSpectrogram, StftConfig, WindowKind};
