import inspect
import pkgutil
from importlib import import_module

from vfplab.errors import ConfigError
from vfplab.experiments.base import Experiment


def _pipelines(module):
    for dir_name in vars(module):
        attribute = getattr(module, dir_name)
        if (
            inspect.isclass(attribute)
            and issubclass(attribute, Experiment)
            and not inspect.isabstract(attribute)
            and attribute.__module__ == module.__name__
        ):
            yield attribute


def grab(exp_name):

    try:
        imported_module = import_module(f"{__name__}.{exp_name}")

    except ModuleNotFoundError:
        raise ConfigError(f"'{exp_name}' is not one of the vfplab pipelines")

    for pipeline in _pipelines(imported_module):
        return pipeline

    raise ConfigError(f"the module '{exp_name}' does not define a pipeline")


def get_experiment_docs():

    docs = {}

    for (_, name, _) in pkgutil.walk_packages(__path__, __name__ + "."):

        imported_module = import_module(f"{name}")

        if any(_pipelines(imported_module)):
            exp_name = name.replace(__name__ + ".", "")
            docs[exp_name] = imported_module.__doc__

    return docs
