from pydantic import BaseModel, ConfigDict


class RunManifest(BaseModel):
    """What was run and on which inputs; timings are never recorded here."""

    model_config = ConfigDict(frozen=True)

    command: str
    config: dict
    master_seed: int
    artifact_version: str
    input_digests: dict[str, str] = {}  # path -> sha256
    outputs: list[str] = []
