"""Error taxonomy shared by all modules.

Every error names the offending entity in its message so failures in large
input files can be located without a debugger.  All domain errors derive from
ScaEvalError; the CLI maps ScaEvalError to exit code 1 and OSError to 2.
"""


class ScaEvalError(Exception):
    """Base class for all domain errors raised by this toolkit."""


# --- dataset ingestion ---------------------------------------------------

class MissingTable(ScaEvalError):
    def __init__(self, table: str):
        self.table = table
        super().__init__(f"required table not found: {table}")


class DanglingReference(ScaEvalError):
    def __init__(self, token: str, context: str = ""):
        self.token = token
        msg = f"unresolved reference: {token}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class MalformedRecord(ScaEvalError):
    def __init__(self, line: str, reason: str = ""):
        self.line = line
        msg = f"malformed record: {line!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class DuplicateObservation(ScaEvalError):
    def __init__(self, clip_id: str, instance_id: str, frame_index: int):
        self.clip_id = clip_id
        self.instance_id = instance_id
        self.frame_index = frame_index
        super().__init__(
            f"duplicate observation: clip={clip_id} instance={instance_id} "
            f"frame={frame_index}"
        )


class InconsistentClipLength(ScaEvalError):
    def __init__(self, clip_id: str, detail: str):
        self.clip_id = clip_id
        super().__init__(f"inconsistent clip length for {clip_id}: {detail}")


# --- masks ----------------------------------------------------------------

class MalformedRle(ScaEvalError):
    def __init__(self, text: str, reason: str):
        self.text = text
        super().__init__(f"malformed RLE {text!r}: {reason}")


# --- metrics --------------------------------------------------------------

class WindowTooLong(ScaEvalError):
    def __init__(self, window_seconds: float, n_frames: int):
        self.window_seconds = window_seconds
        super().__init__(
            f"no frame pair spans a {window_seconds} s window "
            f"in a {n_frames}-frame scene"
        )


class EmptyInput(ScaEvalError):
    def __init__(self, what: str):
        super().__init__(f"no data to aggregate: {what}")


class DimensionMismatch(ScaEvalError):
    def __init__(self, dim_a: int, dim_b: int):
        super().__init__(f"feature dimension mismatch: {dim_a} vs {dim_b}")


class MissingMetric(ScaEvalError):
    def __init__(self, metric_id: str):
        self.metric_id = metric_id
        super().__init__(f"weighted metric missing from report: {metric_id}")


# --- review service -------------------------------------------------------

class UnknownTask(ScaEvalError):
    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"unknown task: {task_id}")


class DuplicateVerdict(ScaEvalError):
    def __init__(self, task_id: str, session_id: str):
        self.task_id = task_id
        self.session_id = session_id
        super().__init__(f"verdict already recorded for task={task_id} session={session_id}")


class TransportError(ScaEvalError):
    def __init__(self, task_id: str, reason: str):
        self.task_id = task_id
        super().__init__(f"judge transport failed for task {task_id}: {reason}")


class UnparseableResponse(ScaEvalError):
    def __init__(self, task_id: str, text: str):
        self.task_id = task_id
        super().__init__(f"unparseable judge response for task {task_id}: {text!r}")
