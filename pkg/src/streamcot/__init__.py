"""Toolkit for think-while-listening speech-dialogue data pipelines.

Compiles time-aligned samples into three-stream training arrangements,
scores question completeness to pick early reasoning onsets, curates
preference pairs by rejection sampling, trains a masked length-normalized
preference objective on a tabular policy, and simulates frame-synchronous
duplex decoding with force-decoding hooks.
"""

from .arrange import (
    ArrangeConfig,
    DecodedSample,
    arrange,
    classify_frames,
    parse,
    validate,
    with_onset,
)
from .dpo import (
    DpoBatchResult,
    ScoringMask,
    TabularPolicy,
    dpo_loss,
    masked_logprob,
    observed_vocab,
    total_loss,
    trace_csv,
    train,
)
from .errors import StreamcotError
from .judge import judge
from .oracle import PositionScore, PrefixScore, RemoteOracle, ToyTabularLm
from .prefs import (
    GenerationRecord,
    PreferencePair,
    curate_correctness,
    curate_length,
    sample_generations,
)
from .qc import (
    QcCurve,
    completeness_batch,
    completeness_curve,
    kl_positionwise,
    select_inflection,
    shift_sample,
    ws_baseline,
)
from .simulate import (
    ForceDecodeConfig,
    MetricSet,
    NoisyReplay,
    ScriptedReplay,
    SimRun,
    SweepRow,
    ToyStochastic,
    latency,
    run,
    start_cot_gap,
    sweep,
    sweep_csv,
    wer,
)
from .tokens import (
    AUDIO_CODEBOOK_SIZE,
    FRAME_RATE_HZ,
    NUM_CODEBOOKS,
    TEXT_VOCAB_SIZE,
    Piece,
    Special,
    Speech,
    frames_to_seconds,
)
from .types import Arrangement, Landmarks, Sample, StreamFrame, Word

__version__ = "0.1.0"

__all__ = [
    "ArrangeConfig",
    "Arrangement",
    "AUDIO_CODEBOOK_SIZE",
    "DecodedSample",
    "DpoBatchResult",
    "ForceDecodeConfig",
    "FRAME_RATE_HZ",
    "GenerationRecord",
    "Landmarks",
    "MetricSet",
    "NoisyReplay",
    "NUM_CODEBOOKS",
    "Piece",
    "PositionScore",
    "PreferencePair",
    "PrefixScore",
    "QcCurve",
    "RemoteOracle",
    "Sample",
    "ScoringMask",
    "ScriptedReplay",
    "SimRun",
    "Special",
    "Speech",
    "StreamFrame",
    "StreamcotError",
    "SweepRow",
    "TabularPolicy",
    "TEXT_VOCAB_SIZE",
    "ToyStochastic",
    "ToyTabularLm",
    "Word",
    "arrange",
    "classify_frames",
    "completeness_batch",
    "completeness_curve",
    "curate_correctness",
    "curate_length",
    "dpo_loss",
    "frames_to_seconds",
    "judge",
    "kl_positionwise",
    "latency",
    "masked_logprob",
    "observed_vocab",
    "parse",
    "run",
    "sample_generations",
    "select_inflection",
    "shift_sample",
    "start_cot_gap",
    "sweep",
    "sweep_csv",
    "total_loss",
    "trace_csv",
    "train",
    "validate",
    "wer",
    "with_onset",
    "ws_baseline",
]
