//! Effective parameters of a run: config file first, flags on top.

use std::fs;
use std::path::{Path, PathBuf};

use emseg::{Error, EvolveParams, SceneSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Failure, SegmentArgs};

/// Everything `segment` needs, with defaults materialized. Written verbatim
/// into summary.json so a run can be replayed from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub image: Option<PathBuf>,
    pub scene: Option<SceneSpec>,
    pub noise: Option<String>,
    pub presmooth: Option<f64>,
    pub init: String,
    pub truth: Option<String>,
    pub params: EvolveParams,
    pub out: PathBuf,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            image: None,
            scene: None,
            noise: None,
            presmooth: None,
            init: String::new(),
            truth: None,
            params: EvolveParams::default(),
            out: PathBuf::from("out"),
        }
    }
}

pub enum TruthSource<'a> {
    Auto,
    File(&'a Path),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Reads TOML, or JSON when the extension says so. A JSON run summary is
/// accepted too: its `config` member is used.
pub fn load_structured<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let bad = |e: String| usage(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| bad(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

pub fn parse_size(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || usage(format!("size: expected WxH, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

pub fn parse_scene_name(name: &str, width: usize, height: usize) -> Result<SceneSpec, Failure> {
    let spec = match name.trim().to_ascii_lowercase().as_str() {
        "bimodal" | "bimodal_disk" => SceneSpec::bimodal(width, height),
        "triple_junction" | "triple" => SceneSpec::triple_junction(width, height),
        "four_region" | "multimodal" => SceneSpec::four_region(width, height),
        other => return Err(usage(format!("scene: unknown kind `{other}`"))),
    };
    spec.validate()?;
    Ok(spec)
}

impl SegmentConfig {
    pub fn resolve(args: &SegmentArgs) -> Result<Self, Failure> {
        let mut cfg = match &args.config {
            Some(path) => load_structured(path)?,
            None => Self::default(),
        };
        if let Some(p) = &args.image {
            cfg.image = Some(p.clone());
            cfg.scene = None;
        }
        if let Some(name) = &args.scene {
            let (w, h) = match &args.size {
                Some(s) => parse_size(s)?,
                None => cfg.scene.as_ref().map_or((128, 128), |s| (s.width, s.height)),
            };
            cfg.scene = Some(parse_scene_name(name, w, h)?);
            cfg.image = None;
        }
        if let Some(n) = &args.noise {
            cfg.noise = Some(n.clone());
        }
        if let Some(s) = args.presmooth {
            cfg.presmooth = Some(s);
        }
        if let Some(i) = &args.init {
            cfg.init = i.clone();
        }
        if let Some(t) = &args.truth {
            cfg.truth = Some(t.clone());
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        let p = &mut cfg.params;
        let m = &mut p.model;
        macro_rules! set {
            ($($dst:expr => $src:expr),* $(,)?) => {
                $(if let Some(v) = $src { $dst = v; })*
            };
        }
        set! {
            m.kind => args.model,
            m.lambda => args.lambda,
            m.sigma => args.sigma,
            m.edge_gain => args.edge_gain,
            p.dt_safety => args.dt_safety,
            p.band_beta => args.band_beta,
            p.reinit_every => args.reinit_every,
            p.max_iters => args.max_iters,
            p.stop_flip_fraction => args.stop_flip_fraction,
            p.stop_window => args.stop_window,
            p.snapshot_every => args.snapshot_every,
            p.seed => args.seed,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        match (&self.image, &self.scene) {
            (None, None) => return Err(usage("no image source: give --image or --scene")),
            (Some(_), Some(_)) => return Err(usage("give only one of image and scene")),
            (None, Some(s)) => s.validate()?,
            _ => {}
        }
        if self.init.trim().is_empty() {
            return Err(usage("init: an initial contour is required (--init)"));
        }
        if let Some(s) = self.presmooth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("presmooth", format!("must be > 0, got {s}")).into());
            }
        }
        self.params.validate()?;
        Ok(())
    }

    pub fn truth(&self) -> Result<Option<TruthSource<'_>>, Failure> {
        Ok(match self.truth.as_deref() {
            None => None,
            Some(t) if t.eq_ignore_ascii_case("auto") => Some(TruthSource::Auto),
            Some(t) => Some(TruthSource::File(Path::new(t))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "init = \"circle:10,10,5\"\n[scene]\nwidth = 32\nheight = 32\nkind = \"bimodal_disk\"\ncx = 16\ncy = 16\nr = 6\ninside = 1\noutside = 0\n[params]\nmax_iters = 7\n[params.model]\nlambda = 0.5\n",
        )
        .unwrap();
        let args = SegmentArgs {
            config: Some(path),
            lambda: Some(0.25),
            ..Default::default()
        };
        let cfg = SegmentConfig::resolve(&args).unwrap();
        assert_eq!(cfg.params.max_iters, 7);
        assert_eq!(cfg.params.model.lambda, 0.25);
        assert_eq!(cfg.scene.as_ref().unwrap().width, 32);
        assert_eq!(cfg.params.model.edge_gain, EvolveParams::default().model.edge_gain);
    }

    #[test]
    fn rejections_name_the_field() {
        let args = SegmentArgs {
            scene: Some("bimodal".into()),
            init: Some("circle:64,64,50".into()),
            dt_safety: Some(-1.0),
            ..Default::default()
        };
        let Err(Failure::Usage(msg)) = SegmentConfig::resolve(&args) else { panic!() };
        assert!(msg.contains("dt_safety"), "{msg}");
        let args = SegmentArgs { scene: Some("bimodal".into()), ..Default::default() };
        let Err(Failure::Usage(msg)) = SegmentConfig::resolve(&args) else { panic!() };
        assert!(msg.contains("init"), "{msg}");
        assert!(parse_size("12by4").is_err());
        assert_eq!(parse_size("40x30").unwrap(), (40, 30));
    }
}
