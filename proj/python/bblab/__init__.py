from ._bblab import (
    DecisionTree,
    Watermark,
    correlate,
    defended_extraction,
    detect,
    embed,
    euclidean_distance,
    extract_tree,
    generate_watermark,
    psnr,
    run_sensitivity_attack,
    synth_dataset,
    synth_image,
    train_tree,
    __version__,
)

__all__ = [
    "DecisionTree",
    "Watermark",
    "correlate",
    "defended_extraction",
    "detect",
    "embed",
    "euclidean_distance",
    "extract_tree",
    "generate_watermark",
    "psnr",
    "run_sensitivity_attack",
    "synth_dataset",
    "synth_image",
    "train_tree",
    "__version__",
]
