use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::data::{parse_lead_list, Lead, N_FEATURES};
use crate::error::{Error, Result};
use crate::hashing::sha256_hex;

/// Width of both trunk outputs and of the fused vector.
pub const FEATURE_DIM: usize = 64;
pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ecg,
    Tab,
    Full,
}

impl ModelKind {
    pub fn uses_ecg(self) -> bool {
        matches!(self, ModelKind::Ecg | ModelKind::Full)
    }

    pub fn uses_tab(self) -> bool {
        matches!(self, ModelKind::Tab | ModelKind::Full)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ecg => "ecg",
            ModelKind::Tab => "tab",
            ModelKind::Full => "full",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ecg" | "ecgnet" => Ok(ModelKind::Ecg),
            "tab" | "tabnet" => Ok(ModelKind::Tab),
            "full" | "fullmodel" => Ok(ModelKind::Full),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?} (ecg|tab|full)"
            ))),
        }
    }
}

/// Convolutional trunk hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgNetConfig {
    pub leads: Vec<Lead>,
    pub filters: usize,
    pub kernel: usize,
    pub dilations: Vec<usize>,
    /// 1-based conv layer indices followed by a max-pool.
    pub pool_after: Vec<usize>,
    pub dropout: f64,
}

impl EcgNetConfig {
    pub fn new(leads: Vec<Lead>) -> Self {
        Self {
            leads,
            filters: FEATURE_DIM,
            kernel: 8,
            dilations: vec![1, 2, 4, 8, 1, 2, 4, 8, 1, 2, 4, 8, 1],
            pool_after: vec![4, 8, 12],
            dropout: 0.05,
        }
    }

    /// Same topology with a different channel width. The head still sees `filters` features.
    pub fn with_filters(mut self, filters: usize) -> Self {
        self.filters = filters;
        self
    }

    pub fn time_reduction(&self) -> usize {
        1 << self.pool_after.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabNetConfig {
    pub n_features: usize,
    pub widths: Vec<usize>,
    pub dropout: f64,
}

impl Default for TabNetConfig {
    fn default() -> Self {
        Self {
            n_features: N_FEATURES,
            widths: vec![256, 128, FEATURE_DIM],
            dropout: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv1d {
        name: String,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        dilation: usize,
    },
    Dense {
        name: String,
        inputs: usize,
        outputs: usize,
    },
    BatchNorm {
        name: String,
        channels: usize,
    },
    Relu,
    Dropout {
        rate: f64,
    },
    MaxPool2,
    GlobalAvgPool,
}

impl LayerSpec {
    pub fn trainable_params(&self) -> usize {
        match self {
            LayerSpec::Conv1d {
                c_in, c_out, kernel, ..
            } => c_out * c_in * kernel + c_out,
            LayerSpec::Dense { inputs, outputs, .. } => outputs * inputs + outputs,
            LayerSpec::BatchNorm { channels, .. } => 2 * channels,
            _ => 0,
        }
    }
}

/// Full network description. Trunks end in a `FEATURE_DIM` vector; the head maps it
/// (or, with fusion, the sum of both trunk vectors) to two logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub ecg: Option<EcgNetConfig>,
    pub tab: Option<TabNetConfig>,
    pub ecg_trunk: Vec<LayerSpec>,
    pub tab_trunk: Vec<LayerSpec>,
    pub head: LayerSpec,
    pub fusion: bool,
}

fn ecg_layers(cfg: &EcgNetConfig) -> Result<Vec<LayerSpec>> {
    if cfg.leads.is_empty() || cfg.leads.len() > 12 {
        return Err(Error::InvalidArgument(format!(
            "EcgNet needs 1..=12 leads, got {}",
            cfg.leads.len()
        )));
    }
    if cfg.dilations.is_empty() || cfg.dilations.contains(&0) || cfg.filters == 0 || cfg.kernel == 0 {
        return Err(Error::InvalidArgument(
            "EcgNet config has zero-sized layers".into(),
        ));
    }
    let mut layers = Vec::new();
    let mut c_in = cfg.leads.len();
    for (i, &d) in cfg.dilations.iter().enumerate() {
        let n = i + 1;
        layers.push(LayerSpec::Conv1d {
            name: format!("ecg.conv{n:02}"),
            c_in,
            c_out: cfg.filters,
            kernel: cfg.kernel,
            dilation: d,
        });
        layers.push(LayerSpec::BatchNorm {
            name: format!("ecg.bn{n:02}"),
            channels: cfg.filters,
        });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dropout { rate: cfg.dropout });
        if cfg.pool_after.contains(&n) {
            layers.push(LayerSpec::MaxPool2);
        }
        c_in = cfg.filters;
    }
    layers.push(LayerSpec::GlobalAvgPool);
    Ok(layers)
}

fn tab_layers(cfg: &TabNetConfig) -> Result<Vec<LayerSpec>> {
    if cfg.n_features == 0 || cfg.widths.is_empty() {
        return Err(Error::InvalidArgument("TabNet needs features and layers".into()));
    }
    let mut layers = Vec::new();
    let mut inputs = cfg.n_features;
    for (i, &w) in cfg.widths.iter().enumerate() {
        let n = i + 1;
        layers.push(LayerSpec::Dense {
            name: format!("tab.dense{n}"),
            inputs,
            outputs: w,
        });
        layers.push(LayerSpec::BatchNorm {
            name: format!("tab.bn{n}"),
            channels: w,
        });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dropout { rate: cfg.dropout });
        inputs = w;
    }
    Ok(layers)
}

fn head(dim: usize) -> LayerSpec {
    LayerSpec::Dense {
        name: "head".into(),
        inputs: dim,
        outputs: N_CLASSES,
    }
}

/// Thirteen dilated conv blocks, three max-pools, global average pooling, softmax head.
pub fn build_ecgnet(n_leads: usize) -> Result<ModelSpec> {
    if n_leads == 0 || n_leads > 12 {
        return Err(Error::InvalidArgument(format!(
            "EcgNet needs 1..=12 leads, got {n_leads}"
        )));
    }
    build_ecgnet_with(EcgNetConfig::new(Lead::ALL[..n_leads].to_vec()))
}

pub fn build_ecgnet_with(cfg: EcgNetConfig) -> Result<ModelSpec> {
    Ok(ModelSpec {
        kind: ModelKind::Ecg,
        ecg_trunk: ecg_layers(&cfg)?,
        tab_trunk: Vec::new(),
        head: head(cfg.filters),
        ecg: Some(cfg),
        tab: None,
        fusion: false,
    })
}

/// Dense 256-128-64 trunk, each layer followed by batch-norm, ReLU and dropout.
pub fn build_tabnet(n_features: usize) -> Result<ModelSpec> {
    build_tabnet_with(TabNetConfig {
        n_features,
        ..TabNetConfig::default()
    })
}

pub fn build_tabnet_with(cfg: TabNetConfig) -> Result<ModelSpec> {
    let dim = *cfg.widths.last().unwrap_or(&0);
    Ok(ModelSpec {
        kind: ModelKind::Tab,
        tab_trunk: tab_layers(&cfg)?,
        ecg_trunk: Vec::new(),
        head: head(dim),
        ecg: None,
        tab: Some(cfg),
        fusion: false,
    })
}

/// Adds the two trunk outputs elementwise and classifies the sum.
pub fn build_fullmodel(ecg: EcgNetConfig, tab: TabNetConfig) -> Result<ModelSpec> {
    let tab_dim = *tab.widths.last().unwrap_or(&0);
    if ecg.filters != tab_dim {
        return Err(Error::Shape(format!(
            "trunk outputs differ: ecg {} vs tab {tab_dim}",
            ecg.filters
        )));
    }
    Ok(ModelSpec {
        kind: ModelKind::Full,
        ecg_trunk: ecg_layers(&ecg)?,
        tab_trunk: tab_layers(&tab)?,
        head: head(ecg.filters),
        ecg: Some(ecg),
        tab: Some(tab),
        fusion: true,
    })
}

impl ModelSpec {
    pub fn build(kind: ModelKind, leads: Vec<Lead>, filters: usize, n_features: usize) -> Result<Self> {
        let ecg = EcgNetConfig::new(leads).with_filters(filters);
        let tab = TabNetConfig {
            n_features,
            widths: vec![256, 128, filters],
            ..TabNetConfig::default()
        };
        match kind {
            ModelKind::Ecg => build_ecgnet_with(ecg),
            ModelKind::Tab => build_tabnet_with(tab),
            ModelKind::Full => build_fullmodel(ecg, tab),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.ecg_trunk
            .iter()
            .chain(&self.tab_trunk)
            .chain(std::iter::once(&self.head))
    }

    pub fn head_inputs(&self) -> usize {
        match self.head {
            LayerSpec::Dense { inputs, .. } => inputs,
            _ => 0,
        }
    }

    pub fn conv_count(&self) -> usize {
        self.ecg_trunk
            .iter()
            .filter(|l| matches!(l, LayerSpec::Conv1d { .. }))
            .count()
    }

    pub fn maxpool_count(&self) -> usize {
        self.ecg_trunk
            .iter()
            .filter(|l| matches!(l, LayerSpec::MaxPool2))
            .count()
    }

    pub fn trainable_params(&self) -> usize {
        self.layers().map(LayerSpec::trainable_params).sum()
    }

    pub fn n_leads(&self) -> usize {
        self.ecg.as_ref().map_or(0, |c| c.leads.len())
    }

    pub fn leads(&self) -> &[Lead] {
        self.ecg.as_ref().map_or(&[], |c| &c.leads)
    }

    pub fn n_features(&self) -> usize {
        self.tab.as_ref().map_or(0, |c| c.n_features)
    }

    /// Compact `key=value;...` form from which [`ModelSpec::from_descriptor`] rebuilds the spec.
    pub fn descriptor(&self) -> String {
        let mut s = format!("kind={}", self.kind);
        if let Some(e) = &self.ecg {
            let leads: Vec<_> = e.leads.iter().map(|l| l.name()).collect();
            let dil: Vec<_> = e.dilations.iter().map(usize::to_string).collect();
            let pools: Vec<_> = e.pool_after.iter().map(usize::to_string).collect();
            write!(
                s,
                ";leads={};filters={};kernel={};dilations={};pools={};ecg_dropout={}",
                leads.join(","),
                e.filters,
                e.kernel,
                dil.join(","),
                pools.join(","),
                e.dropout
            )
            .unwrap();
        }
        if let Some(t) = &self.tab {
            let w: Vec<_> = t.widths.iter().map(usize::to_string).collect();
            write!(
                s,
                ";features={};widths={};tab_dropout={}",
                t.n_features,
                w.join(","),
                t.dropout
            )
            .unwrap();
        }
        s
    }

    pub fn from_descriptor(desc: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("model descriptor {desc:?}: {m}"));
        let mut kind = None;
        let mut ecg = EcgNetConfig::new(Vec::new());
        let mut tab = TabNetConfig::default();
        let nums = |v: &str| -> Result<Vec<usize>> {
            v.split(',')
                .map(|x| x.parse::<usize>().map_err(|_| bad("bad integer list")))
                .collect()
        };
        for kv in desc.split(';') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match k {
                "kind" => kind = Some(v.parse::<ModelKind>()?),
                "leads" => ecg.leads = parse_lead_list(v)?,
                "filters" => ecg.filters = v.parse().map_err(|_| bad("filters"))?,
                "kernel" => ecg.kernel = v.parse().map_err(|_| bad("kernel"))?,
                "dilations" => ecg.dilations = nums(v)?,
                "pools" => ecg.pool_after = nums(v)?,
                "ecg_dropout" => ecg.dropout = v.parse().map_err(|_| bad("ecg_dropout"))?,
                "features" => tab.n_features = v.parse().map_err(|_| bad("features"))?,
                "widths" => tab.widths = nums(v)?,
                "tab_dropout" => tab.dropout = v.parse().map_err(|_| bad("tab_dropout"))?,
                _ => return Err(bad(&format!("unknown key {k}"))),
            }
        }
        match kind.ok_or_else(|| bad("missing kind"))? {
            ModelKind::Ecg => build_ecgnet_with(ecg),
            ModelKind::Tab => build_tabnet_with(tab),
            ModelKind::Full => build_fullmodel(ecg, tab),
        }
    }

    /// First 16 hex digits of the SHA-256 of the descriptor.
    pub fn fingerprint(&self) -> String {
        sha256_hex(self.descriptor().as_bytes())[..16].to_string()
    }

    /// Plain-text table of layer, output shape and parameter count for a given input length.
    pub fn summary(&self, time: usize) -> String {
        let mut out = String::new();
        writeln!(out, "{:<16} {:<16} {:>10}", "layer", "output", "params").unwrap();
        let mut row = |name: String, shape: String, p: usize| {
            writeln!(out, "{name:<16} {shape:<16} {p:>10}").unwrap();
        };
        let (mut c, mut t) = (self.n_leads(), time);
        for l in &self.ecg_trunk {
            let (name, p) = match l {
                LayerSpec::Conv1d {
                    name,
                    c_out,
                    dilation,
                    ..
                } => {
                    c = *c_out;
                    (format!("{name} d={dilation}"), l.trainable_params())
                }
                LayerSpec::BatchNorm { name, .. } => (name.clone(), l.trainable_params()),
                LayerSpec::Relu => ("relu".into(), 0),
                LayerSpec::Dropout { rate } => (format!("dropout {rate}"), 0),
                LayerSpec::MaxPool2 => {
                    t /= 2;
                    ("maxpool2".into(), 0)
                }
                LayerSpec::GlobalAvgPool => {
                    row("gap".into(), format!("{c}"), 0);
                    continue;
                }
                LayerSpec::Dense { .. } => unreachable!("no dense layers in the conv trunk"),
            };
            row(name, format!("{c}x{t}"), p);
        }
        let mut width = self.n_features();
        for l in &self.tab_trunk {
            let name = match l {
                LayerSpec::Dense { name, outputs, .. } => {
                    width = *outputs;
                    name.clone()
                }
                LayerSpec::BatchNorm { name, .. } => name.clone(),
                LayerSpec::Relu => "relu".into(),
                LayerSpec::Dropout { rate } => format!("dropout {rate}"),
                _ => unreachable!("tabular trunk is dense-only"),
            };
            row(name, format!("{width}"), l.trainable_params());
        }
        if self.fusion {
            row("add".into(), format!("{}", self.head_inputs()), 0);
        }
        row(
            "head+softmax".into(),
            format!("{N_CLASSES}"),
            self.head.trainable_params(),
        );
        writeln!(out, "total trainable {}", self.trainable_params()).unwrap();
        out
    }
}
