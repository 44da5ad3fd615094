import importlib
import logging
import os
from logging.handlers import RotatingFileHandler

import click
from dotenv import load_dotenv

from wgbiot.config import LOG_FILE_ENV

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

# Set up logging
logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
log_file = os.getenv(LOG_FILE_ENV)
if log_file:
    handler = RotatingFileHandler(log_file, maxBytes=5 * 1024 * 1024, backupCount=3)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)


@click.group()
def cli():
    """Weak Galerkin solver for the two-field Biot model on polygonal meshes."""


# List of cogs to load
cogs = [
    "cogs.convergence",
    "cogs.locking",
    "cogs.check",
    "cogs.dump_system",
]


def load_cogs():
    """Load all specified cogs."""
    for cog in cogs:
        try:
            module = importlib.import_module(cog)
            module.setup(cli)
            logging.debug(f"{cog} has been loaded.")
        except ModuleNotFoundError as e:
            logging.error(f"{cog} not found. Ensure it is in the correct directory. ({e})")
        except AttributeError:
            logging.error(f"Failed to load {cog}. Error: it has no setup(cli) function")


load_cogs()

if __name__ == "__main__":
    cli()
