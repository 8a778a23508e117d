#pragma once

#include <stdexcept>
#include <string>

namespace fairshare {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// dataset
class IoError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class DuplicateError : public Error { public: using Error::Error; };
class BucketError : public Error { public: using Error::Error; };

// recommender
class EmptyTrainError : public Error { public: using Error::Error; };

// game
class SizeCapError : public Error { public: using Error::Error; };

// asve
class DegenerateError : public Error { public: using Error::Error; };
class KTooLargeError : public Error { public: using Error::Error; };
class NegativeClusterError : public Error { public: using Error::Error; };

// analysis
class TooFewUsersError : public Error { public: using Error::Error; };
class DisjointUsersError : public Error { public: using Error::Error; };

// payout
class ZeroTotalError : public Error { public: using Error::Error; };

} // namespace fairshare
