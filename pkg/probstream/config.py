import os
import typing
from importlib import resources
from logging import NullHandler, getLogger

import yaml

from probstream.serializer import get_yaml_loader

logger = getLogger(__name__)
logger.addHandler(NullHandler())


class Config:
    """Application config class."""

    general: typing.Dict[str, typing.Any]
    adversary: typing.Dict[str, typing.Any]
    amplifier: typing.Dict[str, typing.Any]

    @classmethod
    def build(cls, path: typing.Optional[typing.Union[str, os.PathLike]] = None) -> 'Config':
        """Build config instance from the packaged defaults and an optional user file."""
        loader = get_yaml_loader()
        with resources.files('probstream').joinpath('defaults.yml').open('rb') as stream:
            cfgs = [yaml.load(stream, Loader=loader)]

        if path:
            logger.debug('Loading config from %s', path)
            with open(path, 'rb') as stream:
                cfgs.append(yaml.load(stream, Loader=loader) or {})

        data: typing.Dict[str, typing.Dict[str, typing.Any]] = {}
        for cfg in cfgs:
            for section, values in cfg.items():
                data.setdefault(section, {}).update(values or {})

        config = Config()
        config.__dict__ = data
        return config
