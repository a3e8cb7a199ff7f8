//! Browser bindings for the auralization pipeline. A `Demo` holds one
//! generated graph and its recorded waveforms; the page queries it for
//! edges, centrality colors, per-node waveforms/spectra, and WAV bytes.
//!
//! All logic lives in [`DemoState`], which compiles and tests on native
//! targets; the `#[wasm_bindgen]` layer only converts errors.

use wasm_bindgen::prelude::*;

use netaural::audio;
use netaural::auralize::{auralize, WaveformMatrix};
use netaural::centrality::Measure;
use netaural::graph::{Graph, GraphModel};
use netaural::{Error, Result};

/// One generated-and-auralized graph, ready for interactive exploration.
pub struct DemoState {
    graph: Graph,
    waves: WaveformMatrix,
    sample_rate: u32,
}

impl DemoState {
    pub fn new(
        model: &str,
        a: f64,
        b: f64,
        c: f64,
        seed: u64,
        momentum: f64,
        samples: usize,
    ) -> Result<DemoState> {
        let model = match model {
            "er" => GraphModel::Er { n: a as usize, p: b },
            "ba" => GraphModel::Ba { n: a as usize, k: b as usize },
            "ws" => GraphModel::Ws { n: a as usize, k: b as usize, p: c },
            "caveman" => GraphModel::Caveman { cliques: a as usize, size: b as usize },
            "grid" => GraphModel::Grid { rows: a as usize, cols: b as usize },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown model {other:?}; valid: er, ba, ws, caveman, grid"
                )))
            }
        };
        let graph = model.generate(seed)?.giant_component();
        let waves = auralize(&graph, momentum, samples)?;
        Ok(DemoState {
            graph,
            waves,
            sample_rate: audio::DEFAULT_SAMPLE_RATE,
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Flattened edge pairs `[u0, v0, u1, v1, ...]`.
    pub fn edges(&self) -> Vec<u32> {
        self.graph.edges().iter().flat_map(|&(u, v)| [u, v]).collect()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.graph.degrees().iter().map(|&d| d as u32).collect()
    }

    pub fn centrality(&self, measure: &str) -> Result<Vec<f64>> {
        let measure: Measure = measure.parse()?;
        Ok(measure.compute(&self.graph)?.values)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.graph.node_count() {
            return Err(Error::InvalidParameter(format!(
                "node {node} out of range (n={})",
                self.graph.node_count()
            )));
        }
        Ok(())
    }

    pub fn waveform(&self, node: usize) -> Result<Vec<f64>> {
        self.check_node(node)?;
        Ok(self.waves.column(node))
    }

    pub fn spectrum(&self, node: usize) -> Result<Vec<f64>> {
        self.check_node(node)?;
        Ok(audio::spectrum(&self.waves.column(node)))
    }

    pub fn wav_node(&self, node: usize) -> Result<Vec<u8>> {
        self.check_node(node)?;
        let clip = audio::waveform_to_clip(
            &self.waves.column(node),
            self.sample_rate,
            audio::DEFAULT_PEAK,
        )?;
        Ok(audio::write_wav(&clip))
    }

    pub fn wav_all(&self, gap_secs: f64) -> Result<Vec<u8>> {
        let clip = audio::concat_all_nodes(&self.waves, self.sample_rate, gap_secs)?;
        Ok(audio::write_wav(&clip))
    }

    pub fn node_duration_secs(&self) -> f64 {
        self.waves.steps() as f64 / self.sample_rate as f64
    }
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// JavaScript-facing wrapper around [`DemoState`].
#[wasm_bindgen]
pub struct Demo(DemoState);

#[wasm_bindgen]
impl Demo {
    /// Generates a graph and records its node waveforms.
    ///
    /// `model` is one of `er`, `ba`, `ws`, `caveman`, `grid`; `a`, `b`,
    /// `c` are that model's parameters in order (`er`: n, p; `ba`: n, k;
    /// `ws`: n, k, p; `caveman`: cliques, size; `grid`: rows, cols).
    #[wasm_bindgen(constructor)]
    pub fn new(
        model: &str,
        a: f64,
        b: f64,
        c: f64,
        seed: u32,
        momentum: f64,
        samples: u32,
    ) -> std::result::Result<Demo, JsError> {
        js(DemoState::new(model, a, b, c, seed as u64, momentum, samples as usize).map(Demo))
    }

    pub fn node_count(&self) -> usize {
        self.0.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    pub fn edges(&self) -> Vec<u32> {
        self.0.edges()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.0.degrees()
    }

    /// Per-node scores for coloring: degree, closeness, betweenness, or
    /// eigenvector.
    pub fn centrality(&self, measure: &str) -> std::result::Result<Vec<f64>, JsError> {
        js(self.0.centrality(measure))
    }

    /// One node's waveform (DC already removed).
    pub fn waveform(&self, node: usize) -> std::result::Result<Vec<f64>, JsError> {
        js(self.0.waveform(node))
    }

    /// DFT magnitudes of one node's waveform, bins `0..=l/2`.
    pub fn spectrum(&self, node: usize) -> std::result::Result<Vec<f64>, JsError> {
        js(self.0.spectrum(node))
    }

    /// WAV bytes of one node's voice.
    pub fn wav_node(&self, node: usize) -> std::result::Result<Vec<u8>, JsError> {
        js(self.0.wav_node(node))
    }

    /// WAV bytes of all nodes back to back.
    pub fn wav_all(&self, gap_secs: f64) -> std::result::Result<Vec<u8>, JsError> {
        js(self.0.wav_all(gap_secs))
    }

    /// Seconds of audio a single node produces.
    pub fn node_duration_secs(&self) -> f64 {
        self.0.node_duration_secs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_round_trip_er() {
        let demo = DemoState::new("er", 30.0, 0.15, 0.0, 7, 0.99, 500).unwrap();
        assert!(demo.node_count() >= 2);
        assert_eq!(demo.edges().len(), 2 * demo.edge_count());
        assert_eq!(demo.waveform(0).unwrap().len(), 500);
        assert_eq!(demo.spectrum(0).unwrap().len(), 251);
        let wav = demo.wav_node(0).unwrap();
        assert_eq!(&wav[0..4], b"RIFF");
        let all = demo.wav_all(0.1).unwrap();
        assert!(all.len() > wav.len());
    }

    #[test]
    fn demo_all_models_and_measures() {
        for (model, a, b, c) in [
            ("er", 20.0, 0.2, 0.0),
            ("ba", 20.0, 2.0, 0.0),
            ("ws", 20.0, 4.0, 0.3),
            ("caveman", 4.0, 5.0, 0.0),
            ("grid", 4.0, 5.0, 0.0),
        ] {
            let demo = DemoState::new(model, a, b, c, 1, 0.9, 200).unwrap();
            for measure in ["degree", "closeness", "betweenness", "eigenvector"] {
                let values = demo.centrality(measure).unwrap();
                assert_eq!(values.len(), demo.node_count(), "{model}/{measure}");
            }
        }
    }

    #[test]
    fn demo_rejects_bad_inputs() {
        assert!(DemoState::new("petersen", 10.0, 0.0, 0.0, 0, 0.9, 100).is_err());
        assert!(DemoState::new("er", 10.0, 0.5, 0.0, 0, 1.5, 100).is_err());
        let demo = DemoState::new("er", 10.0, 0.5, 0.0, 0, 0.9, 100).unwrap();
        assert!(demo.waveform(99).is_err());
        assert!(demo.centrality("pagerank").is_err());
    }
}
