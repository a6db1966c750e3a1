from functools import lru_cache

from pydantic import BaseSettings


class Settings(BaseSettings):
    tie_eps: float = 1e-9

    max_iter: int = 2000
    rel_tol: float = 1e-8

    xi_xatol: float = 1e-7
    xi_max_iter: int = 4000
    direct_max_iter: int = 20000
    hessian_step: float = 1e-4
    alpha_floor: float = 1e-8

    seed: int = 20160101
    log_level: str = "WARNING"

    class Config:
        env_prefix = "BEEW_"
        env_file = ".env"

    def __hash__(self):
        return hash((self.tie_eps, self.max_iter, self.rel_tol, self.seed))


@lru_cache()
def get_settings() -> Settings:
    return Settings()
