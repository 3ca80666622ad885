from stentpred.util.misc import StentpredError

from stentpred.data.pullback import *
from stentpred.data.registration import *
from stentpred.expansion import *
from stentpred.features.assemble import *
from stentpred.features.normalize import *
from stentpred.learn.model import *
from stentpred.evaluate.runner import *
