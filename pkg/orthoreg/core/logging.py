import logging


def configure_logging(level: str = "INFO"):
    """Configure base logging for the command-line tools."""
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
