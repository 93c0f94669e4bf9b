import logging
import sys

from aws_lambda_powertools.logging import Logger

# JSON lines on stderr, stdout stays reserved for the CLI summary record.
# service name can be set by environment variable "POWERTOOLS_SERVICE_NAME", level by "LOG_LEVEL"
logger: Logger = Logger(logger_handler=logging.StreamHandler(sys.stderr))
