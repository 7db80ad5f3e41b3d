#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simlens/embedder/types.hpp"

namespace simlens::fixtures {

// The five sorting listings of the reproduction corpus, byte-identical to
// fixtures/*.py (checked by the fixture tests).

inline constexpr std::string_view kBubbleSort = R"py(def bubble_sort(arr):
    n = len(arr)
    for i in range(n):
        for j in range(0, n-i-1):
            if arr[j] > arr[j+1]:
                arr[j], arr[j+1] = arr[j+1], arr[j]
)py";

inline constexpr std::string_view kSelectionSort = R"py(def selection_sort(arr):
    for i in range(len(arr)):
        min_idx = i
        for j in range(i+1, len(arr)):
            if arr[j] < arr[min_idx]:
                min_idx = j
        arr[i], arr[min_idx] = arr[min_idx], arr[i]
    return arr
)py";

inline constexpr std::string_view kInsertionSort = R"py(def insertion_sort(arr):
    for i in range(1, len(arr)):
        key = arr[i]
        j = i-1
        while j >=0 and key < arr[j]:
            arr[j + 1] = arr[j]
            j -= 1
        arr[j + 1] = key
    return arr
)py";

inline constexpr std::string_view kMergeSort = R"py(def merge_sort(arr):
    if len(arr) > 1:
        mid = len(arr) // 2
        L = arr[:mid]
        R = arr[mid:]

        merge_sort(L)
        merge_sort(R)

        i = j = k = 0
        while i < len(L) and j < len(R):
            if L[i] < R[j]:
                arr[k] = L[i]
                i += 1
            else:
                arr[k] = R[j]
                j += 1
            k += 1

        while i < len(L):
            arr[k] = L[i]
            i += 1
            k += 1

        while j < len(R):
            arr[k] = R[j]
            j += 1
            k += 1
)py";

inline constexpr std::string_view kQuickSort = R"py(def partition(arr, low, high):
    pivot = arr[high]
    i = low - 1

    for j in range(low, high):
        if arr[j] <= pivot:
            i = i + 1
            arr[i], arr[j] = arr[j], arr[i]

    arr[i + 1], arr[high] = arr[high], arr[i + 1]
    return i + 1

def quick_sort(arr, low, high):
    if low < high:
        pi = partition(arr, low, high)

        quick_sort(arr, low, pi - 1)
        quick_sort(arr, pi + 1, high)
)py";

struct FixtureEntry {
  std::string_view id;
  std::string_view short_name;
  std::string_view source;
};

inline constexpr std::array<FixtureEntry, 5> kCorpus = {{
    {"bubble_sort", "bubble", kBubbleSort},
    {"selection_sort", "selection", kSelectionSort},
    {"insertion_sort", "insertion", kInsertionSort},
    {"merge_sort", "merge", kMergeSort},
    {"quick_sort", "quick", kQuickSort},
}};

// Accepts the full id ("bubble_sort") or the short name ("bubble").
inline std::optional<CodeFragment> find(std::string_view name) {
  for (const auto& e : kCorpus) {
    if (name == e.id || name == e.short_name) {
      return CodeFragment{std::string(e.id), "python", std::string(e.source)};
    }
  }
  return std::nullopt;
}

inline std::vector<CodeFragment> corpus() {
  std::vector<CodeFragment> out;
  for (const auto& e : kCorpus) out.push_back({std::string(e.id), "python", std::string(e.source)});
  return out;
}

}  // namespace simlens::fixtures
