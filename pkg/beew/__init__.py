__version__ = "0.1.0"


def run():
    from .cli import app

    app(prog_name="beew")
