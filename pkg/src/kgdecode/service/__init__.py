from .app import app_from_env, create_app

__all__ = ["create_app", "app_from_env"]
