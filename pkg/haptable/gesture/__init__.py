from haptable.gesture.classifier import LinearModel, TrainingReport, classify_dynamic, classify_static, train
from haptable.gesture.efd import DescriptorVector, efd, efd_reconstruct
from haptable.gesture.frames import ContactFrame, preprocess
from haptable.gesture.gate import GateDecision, gate
from haptable.gesture.geometry import Circle, min_enclosing_circle
from haptable.gesture.pose import CanonicalPose, HandPose, canonicalize, locate_pose
from haptable.gesture.recognizer import GestureRecognizer, Recognition
from haptable.gesture.settings import DYNAMIC_LABELS, STATIC_LABELS, GestureSettings
