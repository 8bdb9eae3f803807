from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Default output root for reports and synthetic datasets (TWSBENCH_OUT)
    out: str = "runs"

    workers: int = 1
    profile: str = "desk"
    seed: int = 0

    log_level: str = "INFO"

    class Config:
        env_file = ".env"
        env_prefix = "TWSBENCH_"
        case_sensitive = False
        extra = "ignore"


settings = Settings()
