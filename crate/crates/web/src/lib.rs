//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the logic
//! lives in ordinary functions so it can be tested natively.

use num_complex::Complex64;
use serde::Serialize;
use tapscount::channel::{discretize_cir, sample_channel, ChannelClassSpec};
use tapscount::signal::{convolve, generate_tx, TxScheme};
use tapscount::sparse::iht_count_taps;
use tapscount::swiss::{swiss_identify, SwissConfig, SwissObservation};
use wasm_bindgen::prelude::*;

/// Pilot length used by the demo; short enough to plot.
const DEMO_PILOT: usize = 128;

#[derive(Debug, Serialize)]
pub struct ChannelView {
    pub n_taps: usize,
    pub delays: Vec<usize>,
    /// `|h[k]|` over the grid.
    pub cir_magnitude: Vec<f64>,
    /// `|y[n]|` of the pilot convolved with the CIR.
    pub rx_magnitude: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SwissView {
    pub true_taps: usize,
    pub identified_paths: usize,
    /// Sorted energy shares of the strongest reconstructed taps.
    pub top_weights: Vec<f64>,
    pub dual_variable: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Serialize)]
pub struct IhtView {
    pub true_taps: usize,
    pub counted_taps: usize,
}

fn draw(n_taps: usize, window: usize, decay: f64, seed: u64) -> Result<Vec<Complex64>, String> {
    let spec = ChannelClassSpec::on_grid(n_taps, window, decay, 1.0);
    let ch = sample_channel(&spec, seed).map_err(|e| e.to_string())?;
    discretize_cir(&ch, window).map_err(|e| e.to_string())
}

pub fn channel_view(n_taps: usize, window: usize, decay: f64, seed: u64) -> Result<ChannelView, String> {
    let cir = draw(n_taps, window, decay, seed)?;
    let rx = convolve(&generate_tx(DEMO_PILOT, seed ^ 0x5eed, TxScheme::Qpsk), &cir);
    Ok(ChannelView {
        n_taps,
        delays: (0..cir.len()).filter(|&k| cir[k].norm_sqr() > 0.0).collect(),
        cir_magnitude: cir.iter().map(|v| v.norm()).collect(),
        rx_magnitude: rx.iter().map(|v| v.norm()).collect(),
    })
}

pub fn swiss_view(n_taps: usize, window: usize, decay: f64, seed: u64, eta: f64) -> Result<SwissView, String> {
    let cir = draw(n_taps, window, decay, seed)?;
    let cfg = SwissConfig { eta, ..Default::default() };
    let r = swiss_identify(SwissObservation::Cir { cir: &cir, frame_seed: seed }, &cfg).map_err(|e| e.to_string())?;
    let mut top = r.weights.clone();
    top.sort_by(|a, b| b.total_cmp(a));
    top.truncate(16);
    Ok(SwissView {
        true_taps: n_taps,
        identified_paths: r.identified_paths,
        top_weights: top,
        dual_variable: r.dual_variable,
        newton_iterations: r.newton_iterations,
        converged: r.converged,
    })
}

pub fn iht_view(n_taps: usize, window: usize, decay: f64, seed: u64, significance: f64) -> Result<IhtView, String> {
    let cir = draw(n_taps, window, decay, seed)?;
    let x = generate_tx(DEMO_PILOT, seed ^ 0x5eed, TxScheme::Qpsk);
    let y = convolve(&x, &cir);
    let counted = iht_count_taps(&x, &y, window, significance).map_err(|e| e.to_string())?;
    Ok(IhtView { true_taps: n_taps, counted_taps: counted })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e)).and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = drawChannel)]
pub fn draw_channel(n_taps: usize, window: usize, decay: f64, seed: u32) -> Result<String, JsError> {
    to_js(channel_view(n_taps, window, decay, seed as u64))
}

#[wasm_bindgen(js_name = swissCount)]
pub fn swiss_count(n_taps: usize, window: usize, decay: f64, seed: u32, eta: f64) -> Result<String, JsError> {
    to_js(swiss_view(n_taps, window, decay, seed as u64, eta))
}

#[wasm_bindgen(js_name = ihtCount)]
pub fn iht_count(n_taps: usize, window: usize, decay: f64, seed: u32, significance: f64) -> Result<String, JsError> {
    to_js(iht_view(n_taps, window, decay, seed as u64, significance))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_view_is_consistent() {
        let v = channel_view(4, 20, 0.1, 9).unwrap();
        assert_eq!(v.delays.len(), 4);
        assert_eq!(v.delays[0], 0);
        assert_eq!(v.cir_magnitude.len(), 20);
        assert_eq!(v.rx_magnitude.len(), DEMO_PILOT + 19);
        assert!(serde_json::to_string(&v).unwrap().contains("\"n_taps\":4"));
    }

    #[test]
    fn estimators_on_a_contiguous_channel() {
        let s = swiss_view(1, 1, 0.0, 2, 0.995).unwrap();
        assert_eq!(s.identified_paths, 1);
        assert!(s.converged);
        let i = iht_view(3, 3, 0.0, 5, 0.01).unwrap();
        assert_eq!(i.counted_taps, 3);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(channel_view(30, 10, 0.0, 1).is_err());
        assert!(swiss_view(2, 600, 0.0, 1, 0.995).is_err()); // CIR longer than the OFDM symbol
    }
}
