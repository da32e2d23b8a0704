"""Region attribution summaries for face attribute classifiers.

Thin wrapper over the C++ engine: manifests, per-region IoR, high-impact
patches, ranking metrics and the heatmap color scale.
"""

from ._facex import (
    FacexError,
    Manifest,
    Normalization,
    RegionStat,
    RegionTable,
    RunConfig,
    SampleRecord,
    Summary,
    aggregate,
    balance_subset,
    color_of,
    evaluate,
    hex_color,
    load_attribution,
    load_mask,
    mean_ranking,
    parse_summary,
    read_manifest,
    render_heatmap,
    run_command,
    sample_ior,
    score_patches,
    topk_patches,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
