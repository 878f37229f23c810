"""Problem instance generation and dataset files"""

from .channel import (
    ChannelInstance,
    ScenarioConfig,
    db_to_lin,
    dbm_to_watt,
    generate_instances,
    instance_rng,
    lin_to_db,
    pathloss_db,
    sample_instance,
    watt_to_dbm,
)
from .dataset import (
    BinaryDatasetCodec,
    DatasetCodec,
    TextDatasetCodec,
    codec_for,
    read_dataset,
    write_dataset,
)

__all__ = [
    "ChannelInstance",
    "ScenarioConfig",
    "db_to_lin",
    "dbm_to_watt",
    "generate_instances",
    "instance_rng",
    "lin_to_db",
    "pathloss_db",
    "sample_instance",
    "watt_to_dbm",
    "BinaryDatasetCodec",
    "DatasetCodec",
    "TextDatasetCodec",
    "codec_for",
    "read_dataset",
    "write_dataset",
]
