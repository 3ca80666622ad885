from stentpred.util.misc import StentpredError


class ModelError(StentpredError):
    pass
