"""emgds: dual-stage sEMG grasp classification.

Time-domain feature extraction, standardizing PCA, SMO-trained kernel SVMs,
a power/precision dual-stage classifier, and class-separation diagnostics.
"""

from .data import (ActivityClass, Corpus, Full, GroupLabel, Holdout, KFold,
                   Recording, Segment, Sliding, SynthConfig, ingest_csv,
                   segment, split, split_keys, synth_corpus, write_csv)
from .errors import EmgdsError
from .features import (FeatureConfig, FeatureRow, FeatureVector, extract,
                       extract_corpus, read_features_csv, write_features_csv)
from .grouping import (ClassSeparation, DendrogramNode, class_separation,
                       export_dendrogram, linkage, parse_dendrogram_json)
from .pca import (ComponentCount, PcaModel, VarianceFraction, fit_pca,
                  project, project_many, reconstruct)
from .pipeline import (DualStageModel, EvalReport, SingleStageModel,
                       TrainSettings, evaluate, group_of, load_model,
                       predict_dual, predict_single, save_model, train_dual,
                       train_single)
from .svm import (SMO_BACKEND, KernelSpec, MulticlassSvmModel, SvmModel,
                  decision, kernel_eval, predict_multiclass, train_binary,
                  train_multiclass)

__version__ = "0.1.0"

__all__ = [
    "ActivityClass", "ClassSeparation", "ComponentCount", "Corpus",
    "DendrogramNode", "DualStageModel", "EmgdsError", "EvalReport",
    "FeatureConfig", "FeatureRow", "FeatureVector", "Full", "GroupLabel",
    "Holdout", "KFold", "KernelSpec", "MulticlassSvmModel", "PcaModel",
    "Recording", "SMO_BACKEND", "Segment", "SingleStageModel", "Sliding",
    "SvmModel", "SynthConfig", "TrainSettings", "VarianceFraction",
    "class_separation", "decision", "evaluate", "export_dendrogram",
    "extract", "extract_corpus", "fit_pca", "group_of", "ingest_csv",
    "kernel_eval", "linkage", "load_model", "parse_dendrogram_json",
    "predict_dual", "predict_multiclass", "predict_single", "project",
    "project_many", "read_features_csv", "reconstruct", "save_model",
    "segment", "split", "split_keys", "synth_corpus", "train_binary",
    "train_dual", "train_multiclass", "train_single", "write_csv",
    "write_features_csv",
]
