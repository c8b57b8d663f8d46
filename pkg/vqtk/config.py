from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"

    # Reproducibility / execution
    SEED: int = 0
    THREADS: int = 1
    CHUNK_ELEMENTS: int = 1 << 22  # cap on floats held by one distance block

    # Vector quantization
    VQ_BETA: float = 0.25  # commitment weight
    EMA_DECAY: float = 0.99
    DEAD_CODE_THRESHOLD: int = 0
    TRAIN_EPOCHS: int = 20
    TRAIN_BATCH_SIZE: int = 4096

    # Clustering
    KMEANS_MAX_ITERS: int = 100
    KMEANS_BATCH_SIZE: int = 1 << 20  # >= pooled size means full-batch Lloyd
    KMEANS_TOL: float = 1e-6
    KMEANS_N_INIT: int = 1

    # Finite scalar quantization
    FSQ_LEVELS: str = "8,8,5,5,5"

    # Proposal model
    NGRAM_ORDER: int = 2
    NGRAM_ALPHA: float = 1.0

    class Config:
        env_prefix = "VQTK_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"


settings = Settings()
