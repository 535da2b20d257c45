"""Exception hierarchy shared by every module of the toolkit."""


class TranstegError(Exception):
    """Base class for all toolkit errors."""


# audio
class NotWav(TranstegError):
    pass


class UnsupportedFormat(TranstegError):
    pass


class SignalTooShort(TranstegError):
    pass


class EmptyCorpus(TranstegError):
    pass


class SingleSpeaker(TranstegError):
    pass


# codecs
class WrongFrameLength(TranstegError):
    pass


class WrongPayloadLength(TranstegError):
    pass


class InvalidFrame(TranstegError):
    """Payload violates the structural layout of its codec (e.g. bad sync bits)."""


# rtp
class NotFrameAligned(TranstegError):
    pass


class InconsistentStream(TranstegError):
    pass


class PacketTooShort(TranstegError):
    pass


class BadVersion(TranstegError):
    pass


class MalformedStreamFile(TranstegError):
    pass


# stego channel
class CovertNotSmaller(TranstegError):
    pass


class StreamCodecMismatch(TranstegError):
    pass


class SteganogramTooLarge(TranstegError):
    pass


# gmm
class TooFewFrames(TranstegError):
    pass


class DimMismatch(TranstegError):
    pass


class MalformedModelFile(TranstegError):
    pass


# warden / experiments
class UnalignedStreams(TranstegError):
    pass


class UnknownPayloadType(TranstegError):
    pass


class TapsMismatch(TranstegError):
    pass


class TooShort(TranstegError):
    """Signal shorter than the minimum analysable duration."""
